#include "rotcert/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rotcert/report.hpp"
#include "rotcert/rng.hpp"

namespace rotcert {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads `key` of object `j`, reporting the dotted path on failure.
template <class T>
T field(const json &j, const std::string &key, const std::string &where) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!j.is_object() || !j.contains(key)) {
        throw std::invalid_argument("config: missing key '" + path + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw std::invalid_argument("config: bad value for '" + path +
                                    "': " + e.what());
    }
}

void check_known_keys(const json &defaults, const json &given,
                      const std::string &where) {
    if (!given.is_object() || !defaults.is_object()) {
        return;
    }
    for (const auto &[key, value] : given.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!defaults.contains(key)) {
            throw std::invalid_argument("config: unknown key '" + path + "'");
        }
        check_known_keys(defaults.at(key), value, path);
    }
}

json dataset_json(std::uint64_t seed, std::size_t n) {
    return {{"kind", "synthetic"}, {"seed", seed}, {"n", n},
            {"margin", 0.4},       {"path", ""}};
}

DatasetSource parse_dataset(const json &j, const std::string &where) {
    DatasetSource d;
    const auto kind = field<std::string>(j, "kind", where);
    if (kind == "synthetic") {
        d.kind = DatasetSource::Kind::synthetic;
        d.seed = field<std::uint64_t>(j, "seed", where);
        d.n = field<std::size_t>(j, "n", where);
        d.margin = field<double>(j, "margin", where);
        if (d.n == 0 || !(d.margin > 0.0)) {
            throw std::invalid_argument("config: " + where +
                                        " needs n >= 1 and margin > 0");
        }
    } else if (kind == "csv") {
        d.kind = DatasetSource::Kind::csv;
        d.path = field<std::string>(j, "path", where);
        if (!fs::exists(d.path)) {
            throw std::invalid_argument("config: " + where +
                                        ".path does not exist: " +
                                        d.path.string());
        }
    } else {
        throw std::invalid_argument("config: " + where +
                                    ".kind must be synthetic or csv, got '" +
                                    kind + "'");
    }
    return d;
}

std::string config_hash(const json &resolved) {
    return sha1_hex(resolved.dump());
}

class Manifest {
  public:
    Manifest(const RunContext &ctx, std::string command)
        : ctx_(ctx), command_(std::move(command)),
          start_(std::chrono::steady_clock::now()) {}

    void output(const fs::path &p) { outputs_.push_back(p); }
    void set(const std::string &key, json value) { extra_[key] = std::move(value); }

    void write() const {
        json j;
        j["tool"] = "rotcert";
        j["version"] = kToolVersion;
        j["command"] = command_;
        j["config"] = ctx_.resolved;
        j["config_hash"] = config_hash(ctx_.resolved);
        j["master_seed"] = ctx_.config.master_seed;
        j["wall_time_s"] = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start_)
                               .count();
        json outs = json::array();
        for (const auto &p : outputs_) {
            outs.push_back({{"path", p.string()},
                            {"git_blob_hash", git_blob_hash(read_file(p))}});
        }
        j["outputs"] = outs;
        for (const auto &[k, v] : extra_.items()) {
            j[k] = v;
        }
        const fs::path path =
            ctx_.config.output_dir / (command_ + "_manifest.json");
        std::ofstream out(path);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out << j.dump(2) << '\n';
    }

  private:
    const RunContext &ctx_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    std::vector<fs::path> outputs_;
    json extra_ = json::object();
};

void prepare_output_dir(const ExperimentConfig &cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir)) {
        throw std::runtime_error("cannot create output directory " +
                                 cfg.output_dir.string() + ": " +
                                 ec.message());
    }
    const fs::path probe = cfg.output_dir / ".rotcert_write_probe";
    {
        std::ofstream out(probe);
        if (!out) {
            throw std::runtime_error("output directory is not writable: " +
                                     cfg.output_dir.string());
        }
    }
    fs::remove(probe, ec);
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

ClassifierModel load_reference_model(const ExperimentConfig &cfg) {
    const fs::path p = cfg.resolved_model_path();
    if (!fs::exists(p)) {
        throw std::runtime_error("model file not found: " + p.string() +
                                 " (run train first or set model_path)");
    }
    return load_model(p);
}

std::vector<DensityMatrix> encode_all(const ClassifierModel &model,
                                      const Dataset &data) {
    std::vector<DensityMatrix> out;
    out.reserve(data.size());
    for (const auto &x : data.features) {
        out.push_back(model.encoding().encode(x));
    }
    return out;
}

std::size_t count_argmax(const std::vector<std::uint64_t> &counts) {
    std::vector<double> c(counts.begin(), counts.end());
    return argmax(c);
}

std::string json_number(const std::optional<double> &v) {
    return v && std::isfinite(*v) ? format_number(*v) : "";
}

json rate_json(std::size_t flips, std::size_t total) {
    if (total == 0) {
        return nullptr;
    }
    return static_cast<double>(flips) / static_cast<double>(total);
}

std::string rate_text(std::size_t flips, std::size_t total) {
    std::string s = std::to_string(flips) + "/" + std::to_string(total);
    if (total > 0) {
        s += " (" +
             format_number(static_cast<double>(flips) /
                           static_cast<double>(total)) +
             ")";
    }
    return s;
}

}  // namespace

Dataset DatasetSource::load() const {
    if (kind == Kind::csv) {
        return load_csv(path);
    }
    return synth_dataset(n, seed, margin);
}

fs::path ExperimentConfig::resolved_model_path() const {
    return model_path ? *model_path : output_dir / "model.json";
}

json default_config_json() {
    const double two_pi = 2.0 * std::numbers::pi;
    NoiseConfig noise;
    noise.t = 0.5;
    noise.angle_mode = AngleMode::uniform_angle;
    noise.uniform_h = two_pi / 256.0;
    const TrainConfig tc;
    const CertifySampling cs;
    const AttackConfig ac;
    const AuditConfig au;
    return {
        {"dataset", dataset_json(7, 200)},
        {"test_dataset", dataset_json(8, 100)},
        {"encoding", {{"kind", "angle"}, {"num_qubits", 0}}},
        {"ansatz", {{"layers", 2}}},
        {"train",
         {{"learning_rate", tc.learning_rate},
          {"epochs", tc.epochs},
          {"batch_size", tc.batch_size},
          {"reinitialize", tc.reinitialize},
          {"patience", tc.patience}}},
        {"noise", to_json(noise)},
        {"sweep",
         {{"h_values", {two_pi / 16.0, two_pi / 256.0, two_pi / 65536.0}},
          {"shot_sizes", {10, 100, 1000, 10000, 100000}},
          {"repeats", 5},
          {"noise_draws", 4096}}},
        {"certify",
         {{"n_noise", cs.n_noise},
          {"n_shots", nullptr},
          {"zeta", cs.zeta},
          {"beta", cs.beta}}},
        {"attack", {{"budget", ac.budget}}},
        {"audit",
         {{"n_pairs", au.n_pairs}, {"tau_d", au.tau_d}, {"n_noise", au.n_noise}}},
        {"output_dir", "rotcert_out"},
        {"model_path", nullptr},
        {"master_seed", 1},
        {"workers", 1},
    };
}

void apply_override(json &config, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("override must look like key.path=value, got '" +
                                    assignment + "'");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error &) {
        value = text;
    }
    json *node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) {
            throw std::invalid_argument("override has an empty path segment: '" +
                                        path + "'");
        }
        if (node->is_null()) {
            *node = json::object();
        }
        if (!node->is_object()) {
            throw std::invalid_argument("override path '" + path +
                                        "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[key] = std::move(value);
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

json resolve_config(const std::optional<fs::path> &file,
                    const std::vector<std::string> &overrides) {
    const json defaults = default_config_json();
    json resolved = defaults;
    if (file) {
        std::ifstream in(*file);
        if (!in) {
            throw std::runtime_error("cannot open config file " + file->string());
        }
        json user;
        try {
            user = json::parse(in);
        } catch (const json::parse_error &e) {
            throw std::invalid_argument("config file " + file->string() +
                                        " is not valid JSON: " + e.what());
        }
        check_known_keys(defaults, user, "");
        resolved.merge_patch(user);
    }
    for (const auto &o : overrides) {
        apply_override(resolved, o);
    }
    check_known_keys(defaults, resolved, "");
    if (const char *env = std::getenv(kSeedEnvVar); env != nullptr && *env) {
        std::uint64_t seed = 0;
        const char *end = env + std::char_traits<char>::length(env);
        const auto res = std::from_chars(env, end, seed);
        if (res.ec != std::errc{} || res.ptr != end) {
            throw std::invalid_argument(std::string(kSeedEnvVar) +
                                        " must be an unsigned integer, got '" +
                                        env + "'");
        }
        resolved["master_seed"] = seed;
    }
    return resolved;
}

ExperimentConfig parse_config(const json &r) {
    ExperimentConfig c;
    c.dataset = parse_dataset(field<json>(r, "dataset", ""), "dataset");
    c.test_dataset =
        parse_dataset(field<json>(r, "test_dataset", ""), "test_dataset");

    const auto enc = field<json>(r, "encoding", "");
    try {
        c.encoding = encoding_kind_from_string(field<std::string>(enc, "kind", "encoding"));
    } catch (const std::invalid_argument &e) {
        throw std::invalid_argument(std::string("config: encoding.kind: ") + e.what());
    }
    c.encoding_qubits = field<std::size_t>(enc, "num_qubits", "encoding");

    c.ansatz_layers = field<std::size_t>(field<json>(r, "ansatz", ""), "layers", "ansatz");
    if (c.ansatz_layers == 0) {
        throw std::invalid_argument("config: ansatz.layers must be >= 1");
    }

    const auto tr = field<json>(r, "train", "");
    c.train.learning_rate = field<double>(tr, "learning_rate", "train");
    c.train.epochs = field<std::size_t>(tr, "epochs", "train");
    c.train.batch_size = field<std::size_t>(tr, "batch_size", "train");
    c.train.reinitialize = field<bool>(tr, "reinitialize", "train");
    c.train.patience = field<std::size_t>(tr, "patience", "train");
    c.master_seed = field<std::uint64_t>(r, "master_seed", "");
    c.train.seed = derive_seed(c.master_seed, streams::kTrain, 0);
    c.train.validate();

    try {
        c.noise = noise_config_from_json(field<json>(r, "noise", ""));
        c.noise.validate(false);
    } catch (const std::invalid_argument &e) {
        throw std::invalid_argument(std::string("config: noise: ") + e.what());
    }

    if (r.contains("sweep") && !r.at("sweep").is_null()) {
        const auto &s = r.at("sweep");
        SweepConfig sw;
        sw.h_values = field<std::vector<double>>(s, "h_values", "sweep");
        sw.shot_sizes = field<std::vector<std::uint64_t>>(s, "shot_sizes", "sweep");
        sw.repeats = field<std::size_t>(s, "repeats", "sweep");
        sw.noise_draws = field<std::size_t>(s, "noise_draws", "sweep");
        if (sw.h_values.empty()) {
            throw std::invalid_argument("config: sweep.h_values must be nonempty");
        }
        for (double h : sw.h_values) {
            if (!(h > 0.0) || !(h < std::numbers::pi / 2)) {
                throw std::invalid_argument(
                    "config: sweep.h_values entries must lie in (0, pi/2)");
            }
        }
        if (sw.shot_sizes.empty() ||
            std::count(sw.shot_sizes.begin(), sw.shot_sizes.end(), 0u) > 0) {
            throw std::invalid_argument(
                "config: sweep.shot_sizes must be nonempty positive counts");
        }
        if (sw.repeats == 0 || sw.noise_draws == 0) {
            throw std::invalid_argument(
                "config: sweep.repeats and sweep.noise_draws must be >= 1");
        }
        c.sweep = std::move(sw);
    }

    const auto ce = field<json>(r, "certify", "");
    c.certify.n_noise = field<std::size_t>(ce, "n_noise", "certify");
    if (ce.contains("n_shots") && !ce.at("n_shots").is_null()) {
        c.certify.n_shots = field<std::uint64_t>(ce, "n_shots", "certify");
    }
    c.certify.zeta = field<double>(ce, "zeta", "certify");
    c.certify.beta = field<double>(ce, "beta", "certify");
    if (c.certify.n_noise == 0 || (c.certify.n_shots && *c.certify.n_shots == 0) ||
        !(c.certify.zeta > 0.0 && c.certify.zeta < 1.0) ||
        !(c.certify.beta > 0.0 && c.certify.beta < 1.0)) {
        throw std::invalid_argument(
            "config: certify needs n_noise >= 1, n_shots >= 1, zeta and beta in (0, 1)");
    }

    c.attack.budget = field<std::size_t>(field<json>(r, "attack", ""), "budget", "attack");
    if (c.attack.budget == 0) {
        throw std::invalid_argument("config: attack.budget must be >= 1");
    }

    const auto au = field<json>(r, "audit", "");
    c.audit.n_pairs = field<std::size_t>(au, "n_pairs", "audit");
    c.audit.tau_d = field<double>(au, "tau_d", "audit");
    c.audit.n_noise = field<std::size_t>(au, "n_noise", "audit");
    if (c.audit.n_pairs == 0 || c.audit.n_noise == 0 ||
        !(c.audit.tau_d > 0.0 && c.audit.tau_d <= 1.0)) {
        throw std::invalid_argument(
            "config: audit needs n_pairs, n_noise >= 1 and tau_d in (0, 1]");
    }

    c.output_dir = field<std::string>(r, "output_dir", "");
    if (c.output_dir.empty()) {
        throw std::invalid_argument("config: output_dir must be set");
    }
    if (r.contains("model_path") && !r.at("model_path").is_null()) {
        c.model_path = fs::path(field<std::string>(r, "model_path", ""));
    }
    c.workers = field<std::size_t>(r, "workers", "");
    if (c.workers == 0) {
        throw std::invalid_argument("config: workers must be >= 1");
    }
    return c;
}

int cmd_train(const RunContext &ctx) {
    const auto &cfg = ctx.config;
    prepare_output_dir(cfg);
    Manifest manifest(ctx, "train");

    const Dataset train_set = cfg.dataset.load();
    train_set.validate();
    const EncodingScheme enc =
        fit_encoding(cfg.encoding, train_set, cfg.encoding_qubits);
    const CircuitSpec ansatz = make_default_ansatz(enc.num_qubits, cfg.ansatz_layers);
    const ClassifierModel start(ansatz, std::vector<double>(ansatz.num_params(), 0.0),
                                enc);
    const TrainResult result = train(start, train_set, cfg.train);

    const fs::path metrics = cfg.output_dir / "train_metrics.csv";
    {
        CsvWriter csv(metrics, {"epoch", "loss", "train_accuracy", "learning_rate"});
        for (const auto &e : result.history) {
            csv.row({std::to_string(e.epoch), format_number(e.loss),
                     format_number(e.accuracy), format_number(e.learning_rate)});
        }
    }
    manifest.output(metrics);
    manifest.set("train_seed", cfg.train.seed);
    if (result.diverged) {
        manifest.set("diverged", true);
        manifest.write();
        throw std::runtime_error("training diverged: loss became non-finite after epoch " +
                                 std::to_string(result.history.back().epoch));
    }

    const fs::path model_path = cfg.resolved_model_path();
    if (model_path.has_parent_path()) {
        fs::create_directories(model_path.parent_path());
    }
    save_model(result.model, model_path);
    manifest.output(model_path);

    const auto &last = result.history.back();
    ctx.log << "trained " << ansatz.num_params() << " parameters on "
            << train_set.name << ": loss " << format_number(last.loss)
            << ", train accuracy " << format_number(last.accuracy) << '\n';
    const Dataset test_set = cfg.test_dataset.load();
    if (test_set.size() > 0) {
        const double acc = accuracy(result.model, test_set, std::nullopt, 0);
        ctx.log << "test accuracy " << format_number(acc) << " on "
                << test_set.name << '\n';
        manifest.set("test_accuracy", acc);
    }
    manifest.set("train_accuracy", last.accuracy);
    manifest.write();
    ctx.log << "model written to " << model_path.string() << '\n';
    return kExitOk;
}

int cmd_sweep(const RunContext &ctx) {
    const auto &cfg = ctx.config;
    if (!cfg.sweep) {
        throw std::invalid_argument("sweep: config has no sweep block");
    }
    const SweepConfig &sw = *cfg.sweep;
    const ClassifierModel model = load_reference_model(cfg);
    prepare_output_dir(cfg);
    Manifest manifest(ctx, "sweep");

    const Dataset test_set = cfg.test_dataset.load();
    if (test_set.size() == 0) {
        throw std::invalid_argument("sweep: test set is empty");
    }
    const auto states = encode_all(model, test_set);
    std::vector<std::vector<double>> exact;
    exact.reserve(states.size());
    for (const auto &s : states) {
        exact.push_back(predict_exact(model, s));
    }

    const std::size_t n_h = sw.h_values.size();
    const std::size_t n_s = sw.shot_sizes.size();
    const std::size_t n_r = sw.repeats;
    const std::size_t n_cells = n_h * n_s * n_r;
    struct Cell {
        double acc_noiseless = 0.0;
        double acc_noisy = 0.0;
    };
    std::vector<Cell> cells(n_cells);

    auto run_cell = [&](std::size_t c) {
        const std::size_t hi = c / (n_s * n_r);
        const std::size_t si = (c / n_r) % n_s;
        const std::uint64_t cell_seed = derive_seed(cfg.master_seed, streams::kSweep, c);
        NoiseConfig nc = cfg.noise;
        nc.angle_mode = AngleMode::uniform_angle;
        nc.uniform_h = sw.h_values[hi];
        const NoisyObservable noisy(model, nc, sw.noise_draws,
                                    derive_seed(cell_seed, streams::kNoise, 0));
        const std::uint64_t shots = sw.shot_sizes[si];
        std::size_t hit_clean = 0;
        std::size_t hit_noisy = 0;
        for (std::size_t i = 0; i < states.size(); ++i) {
            const auto label = static_cast<std::size_t>(test_set.labels[i]);
            const auto clean = sample_shots(
                exact[i], shots, derive_seed(cell_seed, streams::kShots, 2 * i));
            const auto p = noisy.probabilities(states[i]);
            const auto dirty = sample_shots(
                p, shots, derive_seed(cell_seed, streams::kShots, 2 * i + 1));
            hit_clean += count_argmax(clean) == label;
            hit_noisy += count_argmax(dirty) == label;
        }
        const auto n = static_cast<double>(states.size());
        cells[c] = {static_cast<double>(hit_clean) / n,
                    static_cast<double>(hit_noisy) / n};
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < n_cells; c = next++) {
            run_cell(c);
        }
    };
    const std::size_t n_workers = std::min(cfg.workers, n_cells);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < n_workers; ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }

    const fs::path csv_path = cfg.output_dir / "sweep.csv";
    {
        CsvWriter csv(csv_path, {"h", "shots", "repeat", "acc_noiseless", "acc_noisy"});
        for (std::size_t c = 0; c < n_cells; ++c) {
            const std::size_t hi = c / (n_s * n_r);
            const std::size_t si = (c / n_r) % n_s;
            csv.row({format_number(sw.h_values[hi]), std::to_string(sw.shot_sizes[si]),
                     std::to_string(c % n_r), format_number(cells[c].acc_noiseless),
                     format_number(cells[c].acc_noisy)});
        }
    }
    manifest.output(csv_path);

    // mean and max-min spread over repeats, per (h, shots)
    const fs::path summary_path = cfg.output_dir / "sweep_summary.csv";
    std::vector<Series> series;
    Series clean_series{"noiseless", {}, {}, {}, {}};
    {
        CsvWriter csv(summary_path, {"h", "shots", "mean_noiseless", "mean_noisy",
                                     "spread_noiseless", "spread_noisy"});
        for (std::size_t hi = 0; hi < n_h; ++hi) {
            Series s{"h=" + format_number(sw.h_values[hi]), {}, {}, {}, {}};
            std::vector<double> spreads;
            for (std::size_t si = 0; si < n_s; ++si) {
                double sum_c = 0.0, sum_n = 0.0;
                double lo_c = 1.0, hi_c = 0.0, lo_n = 1.0, hi_n = 0.0;
                for (std::size_t r = 0; r < n_r; ++r) {
                    const Cell &cell = cells[(hi * n_s + si) * n_r + r];
                    sum_c += cell.acc_noiseless;
                    sum_n += cell.acc_noisy;
                    lo_c = std::min(lo_c, cell.acc_noiseless);
                    hi_c = std::max(hi_c, cell.acc_noiseless);
                    lo_n = std::min(lo_n, cell.acc_noisy);
                    hi_n = std::max(hi_n, cell.acc_noisy);
                }
                const double mean_c = sum_c / static_cast<double>(n_r);
                const double mean_n = sum_n / static_cast<double>(n_r);
                csv.row({format_number(sw.h_values[hi]),
                         std::to_string(sw.shot_sizes[si]), format_number(mean_c),
                         format_number(mean_n), format_number(hi_c - lo_c),
                         format_number(hi_n - lo_n)});
                const auto shots = static_cast<double>(sw.shot_sizes[si]);
                s.x.push_back(shots);
                s.y.push_back(mean_n);
                s.y_low.push_back(lo_n);
                s.y_high.push_back(hi_n);
                spreads.push_back(hi_n - lo_n);
                if (hi == 0) {
                    clean_series.x.push_back(shots);
                    clean_series.y.push_back(mean_c);
                    clean_series.y_low.push_back(lo_c);
                    clean_series.y_high.push_back(hi_c);
                }
            }
            std::sort(spreads.begin(), spreads.end());
            ctx.log << "h=" << format_number(sw.h_values[hi])
                    << ": median accuracy spread over shot sizes "
                    << format_number(spreads[spreads.size() / 2]) << '\n';
            series.push_back(std::move(s));
        }
    }
    series.push_back(std::move(clean_series));
    manifest.output(summary_path);

    const fs::path svg_path = cfg.output_dir / "sweep.svg";
    write_text(svg_path, emit_svg(series, {"Test accuracy vs. shots per input",
                                           "shots", "accuracy", true}));
    manifest.output(svg_path);
    manifest.write();
    ctx.log << "wrote " << n_cells << " sweep rows to " << csv_path.string() << '\n';
    return kExitOk;
}

int cmd_certify(const RunContext &ctx, const CertifyRequest &request) {
    const auto &cfg = ctx.config;
    const ClassifierModel model = load_reference_model(cfg);
    prepare_output_dir(cfg);
    Manifest manifest(ctx, "certify");
    const std::string model_hash =
        git_blob_hash(read_file(cfg.resolved_model_path()));

    Dataset inputs;
    std::vector<std::size_t> indices;
    std::string source;
    if (request.input_file) {
        inputs = load_csv(*request.input_file);
        inputs.validate();
        source = request.input_file->string();
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            indices.push_back(i);
        }
    } else {
        inputs = cfg.test_dataset.load();
        source = inputs.name;
        indices = request.indices;
        if (indices.empty()) {
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                indices.push_back(i);
            }
        }
        for (std::size_t i : indices) {
            if (i >= inputs.size()) {
                throw std::invalid_argument("certify: input index " + std::to_string(i) +
                                            " out of range for " +
                                            std::to_string(inputs.size()) + " inputs");
            }
        }
    }

    const fs::path report_dir = cfg.output_dir / "certify";
    fs::create_directories(report_dir);
    const fs::path summary_path = cfg.output_dir / "certify_summary.csv";
    bool any_not = false;
    bool any_t_zero = false;
    {
        CsvWriter csv(summary_path,
                      {"input", "label", "predicted_class", "verdict", "y_noisy_0",
                       "y_noisy_1", "B", "tau_d", "epsilon", "report"});
        for (std::size_t i : indices) {
            const DensityMatrix sigma = model.encoding().encode(inputs.features[i]);
            const std::uint64_t seed = derive_seed(cfg.master_seed, streams::kNoise, i);
            CertificationReport rep =
                certify_input(model, sigma, cfg.noise, cfg.certify, seed);
            rep.provenance["master_seed"] = cfg.master_seed;
            rep.provenance["config_hash"] = config_hash(ctx.resolved);
            rep.provenance["model_hash"] = model_hash;
            rep.provenance["input_source"] = source;
            rep.provenance["input_index"] = i;
            rep.provenance["tool_version"] = kToolVersion;

            const fs::path rp = report_dir / ("input_" + std::to_string(i) + ".json");
            write_text(rp, to_json(rep).dump(2) + "\n");
            manifest.output(rp);
            csv.row({std::to_string(i), std::to_string(inputs.labels[i]),
                     std::to_string(rep.predicted_class),
                     std::string(to_string(rep.verdict)),
                     format_number(rep.y_noisy.at(0)), format_number(rep.y_noisy.at(1)),
                     std::isfinite(rep.B) ? format_number(rep.B) : "inf",
                     format_number(rep.tau_d), json_number(rep.epsilon),
                     rp.filename().string()});
            ctx.log << "input " << i << ": " << to_string(rep.verdict)
                    << ", class " << rep.predicted_class << ", tau_d "
                    << format_number(rep.tau_d) << '\n';
            any_not |= rep.verdict == Verdict::not_certified;
            any_t_zero |= rep.verdict == Verdict::uncertifiable_t_zero;
        }
    }
    manifest.output(summary_path);
    manifest.set("model_hash", model_hash);
    manifest.write();
    if (any_t_zero) {
        return kExitUncertifiable;
    }
    return any_not ? kExitNotCertified : kExitOk;
}

int cmd_attack(const RunContext &ctx, const AttackRequest &request) {
    const auto &cfg = ctx.config;
    if (request.tau_d && !(*request.tau_d > 0.0 && *request.tau_d <= 1.0)) {
        throw std::invalid_argument("attack: tau_d must lie in (0, 1]");
    }
    if (!(request.tau_scale > 0.0)) {
        throw std::invalid_argument("attack: tau scale must be positive");
    }
    const ClassifierModel model = load_reference_model(cfg);
    prepare_output_dir(cfg);
    Manifest manifest(ctx, "attack");

    const Dataset test_set = cfg.test_dataset.load();
    CertifySampling exact = cfg.certify;
    exact.n_shots.reset();
    // One noisy classifier for both the radius and the search, so the
    // attack probes exactly the object that was certified.
    const NoisyObservable noisy(model, cfg.noise, cfg.certify.n_noise,
                                derive_seed(cfg.master_seed, streams::kAttack, 0));

    std::size_t in_total = 0, in_flips = 0, out_total = 0, out_flips = 0;
    const fs::path csv_path = cfg.output_dir / "attack.csv";
    {
        CsvWriter csv(csv_path,
                      {"input", "label", "noisy_label", "verdict", "certified_radius",
                       "attack_radius", "region", "flipped", "base_margin",
                       "worst_margin", "worst_distance", "evaluations"});
        for (std::size_t i = 0; i < test_set.size(); ++i) {
            const DensityMatrix sigma = model.encoding().encode(test_set.features[i]);
            const auto y = predict_exact(model, sigma);
            const auto yt = noisy.probabilities(sigma);
            const auto rep = certify_from_probabilities(y, yt, cfg.noise, exact);
            const bool certified = rep.verdict == Verdict::certified;
            const double certified_radius = certified ? rep.tau_d : 0.0;
            const double radius = request.tau_d
                                      ? *request.tau_d
                                      : std::min(1.0, request.tau_scale * certified_radius);
            std::string region = "skipped";
            AttackResult res;
            res.label = argmax(yt);
            if (radius > 0.0) {
                res = attack_search(noisy, sigma, radius, cfg.attack.budget,
                                    derive_seed(cfg.master_seed, streams::kAttack, i + 1));
                const bool inside =
                    certified && radius <= certified_radius * (1.0 + 1e-12);
                region = inside ? "inside" : "outside";
                (inside ? in_total : out_total) += 1;
                (inside ? in_flips : out_flips) += res.flipped ? 1 : 0;
            }
            csv.row({std::to_string(i), std::to_string(test_set.labels[i]),
                     std::to_string(res.label), std::string(to_string(rep.verdict)),
                     format_number(certified_radius), format_number(radius), region,
                     res.flipped ? "1" : "0", format_number(res.base_margin),
                     format_number(res.worst_margin), format_number(res.worst_distance),
                     std::to_string(res.evaluations)});
        }
    }
    manifest.output(csv_path);

    const json summary = {
        {"inputs", test_set.size()},
        {"inside", {{"attacked", in_total}, {"flipped", in_flips},
                    {"flip_rate", rate_json(in_flips, in_total)}}},
        {"outside", {{"attacked", out_total}, {"flipped", out_flips},
                     {"flip_rate", rate_json(out_flips, out_total)}}},
        {"tau_d", request.tau_d ? json(*request.tau_d) : json(nullptr)},
        {"tau_scale", request.tau_scale},
        {"budget", cfg.attack.budget},
    };
    const fs::path summary_path = cfg.output_dir / "attack_summary.json";
    write_text(summary_path, summary.dump(2) + "\n");
    manifest.output(summary_path);
    manifest.write();
    ctx.log << "flip rate inside certified radius " << rate_text(in_flips, in_total)
            << ", outside " << rate_text(out_flips, out_total) << '\n';
    return kExitOk;
}

int cmd_audit(const RunContext &ctx) {
    const auto &cfg = ctx.config;
    if (cfg.noise.t == 0.0) {
        ctx.log << "audit: noise.t = 0 gives an unbounded privacy budget; nothing to audit\n";
        return kExitUncertifiable;
    }
    const ClassifierModel model = load_reference_model(cfg);
    prepare_output_dir(cfg);
    Manifest manifest(ctx, "audit");
    const DpAuditReport rep =
        audit_dp(model, cfg.noise, cfg.audit.tau_d, cfg.audit.n_pairs,
                 derive_seed(cfg.master_seed, streams::kAudit, 0), cfg.audit.n_noise);
    const fs::path path = cfg.output_dir / "audit.json";
    write_text(path, to_json(rep).dump(2) + "\n");
    manifest.output(path);
    manifest.write();
    ctx.log << "audited " << rep.pairs_evaluated << " pairs (" << rep.pairs_skipped
            << " skipped): max |ln ratio| " << format_number(rep.max_abs_log_ratio)
            << " vs analytic epsilon " << format_number(rep.analytic_epsilon) << ", "
            << rep.violations.size() << " violations\n";
    return rep.violations.empty() ? kExitOk : kExitNotCertified;
}

}  // namespace rotcert
