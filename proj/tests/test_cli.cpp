#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sys/wait.h>

#include "reference.hpp"
#include "rotcert/experiment.hpp"
#include "rotcert/report.hpp"

using namespace rotcert;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t count(const std::string &hay, const std::string &needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) {
        ++n;
    }
    return n;
}

struct Run {
    int status;
    std::string output;
};

// Runs the command line tool inside `dir`, capturing stdout and stderr.
Run run_cli(const fs::path &dir, const std::string &args) {
    const fs::path log = dir / "cli_output.txt";
    const std::string cmd = "cd '" + dir.string() + "' && '" ROTCERT_CLI_PATH "' " + args +
                            " > '" + log.string() + "' 2>&1";
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, read_file(log)};
}

fs::path fresh_dir(const std::string &name) {
    const fs::path d = fs::current_path() / ("cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_json(const fs::path &p, const json &j) { std::ofstream(p) << j.dump(2); }

// Config pointing at a prebuilt model and a small test set.
json small_config(const fs::path &dir) {
    return {{"output_dir", (dir / "out").string()},
            {"model_path", (dir / "model.json").string()},
            {"test_dataset", {{"kind", "synthetic"}, {"seed", 8}, {"n", 4}, {"margin", 0.4}}},
            {"noise", {{"n", 3}, {"t", 0.5}, {"angle_mode", "uniform_angle"}, {"uniform_h", 0.1}}},
            {"certify", {{"n_noise", 16}}}};
}

}  // namespace

TEST_CASE("svg with one point has one marker") {
    const std::vector<Series> one{{"only", {1.0}, {0.5}, {}, {}}};
    const auto svg = emit_svg(one, {"t", "x", "y", false});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("viewBox=\"0 0 800 500\"") != std::string::npos);
    CHECK(count(svg, "<circle") == 1);
    CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("svg legend, determinism and errors") {
    const std::vector<Series> two{{"a", {10, 100, 1000}, {0.8, 0.9, 0.95}, {}, {}},
                                  {"b<&>", {10, 100, 1000}, {0.7, 0.85, 0.9}, {0.6, 0.8, 0.88},
                                   {0.75, 0.9, 0.93}}};
    const ChartSpec chart{"acc", "shots", "accuracy", true};
    const auto svg = emit_svg(two, chart);
    CHECK(count(svg, "class=\"legend\"") == 2);
    CHECK(count(svg, "<polyline") == 2);
    CHECK(svg.find("b&lt;&amp;&gt;") != std::string::npos);
    CHECK(emit_svg(two, chart) == svg);
    CHECK_THROWS(emit_svg(std::vector<Series>{}, chart));
    CHECK_THROWS(emit_svg(std::vector<Series>{{"e", {}, {}, {}, {}}}, chart));
    CHECK_THROWS(emit_svg(std::vector<Series>{{"r", {1, 2}, {1}, {}, {}}}, chart));
}

TEST_CASE("CSV writer output parses back") {
    const fs::path p = fs::temp_directory_path() / "rotcert_test_writer.csv";
    Rng rng(51);
    std::vector<std::vector<std::string>> rows;
    const std::string alphabet = "ab,\"x 1.";
    for (int r = 0; r < 50; ++r) {
        std::vector<std::string> row;
        for (int c = 0; c < 3; ++c) {
            std::string f;
            for (std::uint64_t k = rng.below(6); k > 0; --k) {
                f += alphabet[rng.below(alphabet.size())];
            }
            row.push_back(f.empty() ? format_number(rng.normal()) : f);
        }
        rows.push_back(row);
    }
    {
        CsvWriter w(p, {"a", "b", "c"});
        for (const auto &r : rows) {
            w.row(r);
        }
        CHECK(w.rows_written() == 50);
        CHECK_THROWS(w.row({"1"}));
    }
    const auto t = read_csv_table(p);
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    CHECK(t.rows == rows);
}

TEST_CASE("number formatting round trips") {
    Rng rng(52);
    for (int i = 0; i < 100; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
        CHECK(std::stod(format_number(v)) == v);
    }
}

TEST_CASE("git blob hashes") {
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
}

TEST_CASE("config overrides") {
    auto j = default_config_json();
    apply_override(j, "noise.t=0.25");
    apply_override(j, "noise.angle_mode=tan_bounded");
    apply_override(j, "sweep.h_values=[0.1,0.2]");
    CHECK(j["noise"]["t"] == 0.25);
    CHECK(j["noise"]["angle_mode"] == "tan_bounded");
    CHECK(j["sweep"]["h_values"].size() == 2);
    CHECK_THROWS(apply_override(j, "noise.t"));
    CHECK_THROWS(apply_override(j, "noise..t=1"));
    CHECK_THROWS(resolve_config(std::nullopt, {"nosie.t=0.1"}));

    const auto cfg = parse_config(resolve_config(std::nullopt, {"master_seed=99"}));
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.sweep->h_values.size() == 3);
    CHECK_THROWS(parse_config(resolve_config(std::nullopt, {"sweep.h_values=[]"})));
    CHECK_THROWS(parse_config(resolve_config(std::nullopt, {"ansatz.layers=0"})));
    const auto no_sweep = parse_config(resolve_config(std::nullopt, {"sweep=null"}));
    CHECK_FALSE(no_sweep.sweep);

    ::setenv(kSeedEnvVar, "1234", 1);
    CHECK(parse_config(resolve_config(std::nullopt, {"master_seed=5"})).master_seed == 1234);
    ::setenv(kSeedEnvVar, "12x", 1);
    CHECK_THROWS(resolve_config(std::nullopt, {}));
    ::unsetenv(kSeedEnvVar);
}

TEST_CASE("missing csv path is reported") {
    const auto dir = fresh_dir("missing");
    const auto r = run_cli(dir, "train --set dataset.kind=csv --set dataset.path=/no/such/data.csv");
    CHECK(r.status == kExitError);
    CHECK(r.output.find("/no/such/data.csv") != std::string::npos);
    CHECK(run_cli(dir, "frobnicate").status == kExitError);
    CHECK(run_cli(dir, "sweep --set output_dir=" + (dir / "nomodel").string()).status ==
          kExitError);
}

TEST_CASE("train is reproducible byte for byte") {
    const auto dir = fresh_dir("train");
    const std::string common = "--set train.epochs=3 --set dataset.n=40 --set test_dataset.n=10 ";
    const auto a = run_cli(dir, "train " + common + "--set output_dir=a");
    const auto b = run_cli(dir, "train " + common + "--set output_dir=b");
    REQUIRE(a.status == 0);
    REQUIRE(b.status == 0);
    CHECK(read_file(dir / "a" / "model.json") == read_file(dir / "b" / "model.json"));
    const auto metrics = read_csv_table(dir / "a" / "train_metrics.csv");
    CHECK(metrics.header ==
          std::vector<std::string>{"epoch", "loss", "train_accuracy", "learning_rate"});
    CHECK(metrics.rows.size() == 4);
    const auto manifest = json::parse(read_file(dir / "a" / "train_manifest.json"));
    CHECK(manifest.at("tool") == "rotcert");
    CHECK(manifest.at("master_seed") == 1);
    CHECK(manifest.at("config").at("train").at("epochs") == 3);
    CHECK(manifest.at("outputs").size() == 2);

    ::setenv(kSeedEnvVar, "77", 1);
    const auto c = run_cli(dir, "train " + common + "--set output_dir=c");
    ::unsetenv(kSeedEnvVar);
    REQUIRE(c.status == 0);
    CHECK(json::parse(read_file(dir / "c" / "train_manifest.json")).at("master_seed") == 77);
    CHECK(read_file(dir / "c" / "model.json") != read_file(dir / "a" / "model.json"));
}

TEST_CASE("certify exit codes") {
    const auto dir = fresh_dir("certify");
    write_json(dir / "config.json", small_config(dir));

    save_model(reference::constant_model(0.9), dir / "model.json");
    // B = 9 gives radius (3 - 1) * 0.5^3 even though 0.1 < t^n blocks the verdict
    CHECK(run_cli(dir, "certify -c config.json --index 0").status == kExitNotCertified);
    const auto wide = json::parse(read_file(dir / "out" / "certify" / "input_0.json"));
    CHECK(std::abs(wide.at("tau_d").get<double>() - 0.25) < 1e-9);

    save_model(reference::constant_model(0.8), dir / "model.json");
    const auto ok = run_cli(dir, "certify -c config.json --index 0");
    CHECK(ok.status == kExitOk);
    const auto rep = json::parse(read_file(dir / "out" / "certify" / "input_0.json"));
    CHECK(rep.at("verdict") == "certified");
    CHECK(std::abs(rep.at("tau_d").get<double>() - 0.125) < 1e-9);
    CHECK(rep.at("provenance").at("model_hash") ==
          git_blob_hash(read_file(dir / "model.json")));

    CHECK(run_cli(dir, "certify -c config.json --set noise.t=0").status == kExitUncertifiable);

    save_model(reference::constant_model(0.5), dir / "model.json");
    CHECK(run_cli(dir, "certify -c config.json --index 1 --index 2").status ==
          kExitNotCertified);
    const auto summary = read_csv_table(dir / "out" / "certify_summary.csv");
    CHECK(summary.rows.size() == 2);

    CHECK(run_cli(dir, "certify -c config.json --index 99").status == kExitError);
    std::ofstream(dir / "bad.csv") << "0.1,0.2,0.3,1\n0.1,zzz,0.3,0\n";
    CHECK(run_cli(dir, "certify -c config.json --input-file bad.csv").status == kExitError);
    std::ofstream(dir / "good.csv") << "0.1,0.2,0.3,1\n";
    CHECK(run_cli(dir, "certify -c config.json --input-file good.csv").status ==
          kExitNotCertified);
}

TEST_CASE("attack on an empty test set") {
    const auto dir = fresh_dir("attack_empty");
    auto cfg = small_config(dir);
    std::ofstream(dir / "empty.csv") << "";
    cfg["test_dataset"] = {{"kind", "csv"}, {"path", (dir / "empty.csv").string()}};
    write_json(dir / "config.json", cfg);
    save_model(reference::constant_model(0.8), dir / "model.json");
    const auto r = run_cli(dir, "attack -c config.json");
    CHECK(r.status == kExitOk);
    const auto t = read_csv_table(dir / "out" / "attack.csv");
    CHECK(t.header.size() == 12);
    CHECK(t.rows.empty());
    CHECK(r.output.find("0/0") != std::string::npos);
}

TEST_CASE("attack and audit on a constant model") {
    const auto dir = fresh_dir("attack");
    write_json(dir / "config.json", small_config(dir));
    save_model(reference::constant_model(0.8), dir / "model.json");
    // a constant classifier cannot be flipped at any radius
    CHECK(run_cli(dir, "attack -c config.json --tau-d 1 --set attack.budget=50").status == 0);
    const auto t = read_csv_table(dir / "out" / "attack.csv");
    REQUIRE(t.rows.size() == 4);
    for (const auto &row : t.rows) {
        CHECK(row[7] == "0");
    }
    const auto audit = run_cli(dir, "audit -c config.json --set audit.n_pairs=20 --set audit.n_noise=8");
    CHECK(audit.status == 0);
    const auto j = json::parse(read_file(dir / "out" / "audit.json"));
    CHECK(j.at("violations").empty());
    CHECK(run_cli(dir, "audit -c config.json --set noise.t=0").status == kExitUncertifiable);
}

TEST_CASE("sweep writes one row per cell") {
    const auto dir = fresh_dir("sweep");
    auto cfg = small_config(dir);
    cfg["sweep"] = {{"h_values", {0.3, 0.01}}, {"shot_sizes", {10, 100, 1000}},
                    {"repeats", 2}, {"noise_draws", 16}};
    cfg["workers"] = 3;
    write_json(dir / "config.json", cfg);
    save_model(reference::model(), dir / "model.json");
    REQUIRE(run_cli(dir, "sweep -c config.json").status == 0);
    const auto t = read_csv_table(dir / "out" / "sweep.csv");
    CHECK(t.header ==
          std::vector<std::string>{"h", "shots", "repeat", "acc_noiseless", "acc_noisy"});
    CHECK(t.rows.size() == 2 * 3 * 2);
    CHECK(t.rows[0][0] == "0.3");
    CHECK(t.rows[0][1] == "10");
    CHECK(t.rows[11][0] == "0.01");
    const auto first = read_file(dir / "out" / "sweep.csv");
    const auto svg = read_file(dir / "out" / "sweep.svg");
    CHECK(count(svg, "class=\"legend\"") == 3);
    REQUIRE(run_cli(dir, "sweep -c config.json --set workers=1").status == 0);
    CHECK(read_file(dir / "out" / "sweep.csv") == first);
    CHECK(read_file(dir / "out" / "sweep.svg") == svg);
}
