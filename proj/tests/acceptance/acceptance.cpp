// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <sys/wait.h>

#include "oracles.hpp"
#include "reference.hpp"
#include "support.hpp"
#include "rotcert/certify.hpp"
#include "rotcert/experiment.hpp"
#include "rotcert/report.hpp"

using namespace rotcert;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kFormulaTol = 1e-9;
constexpr double kCircuitTol = 1e-10;
constexpr double kExpansionTol = 1e-12;
constexpr double kFdStep = 1e-5;
constexpr double kGradTol = 1e-6;
constexpr double kSweepGapTol = 0.02;
constexpr double kT = 0.5;
constexpr std::size_t kN = 3;
const double kTwoPi = 2.0 * std::numbers::pi;
const double kH4 = kTwoPi / 16.0;
const double kH8 = kTwoPi / 256.0;
const double kH16 = kTwoPi / 65536.0;

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void criterion(const std::string &name, double budget_s, const std::function<Outcome()> &body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception &e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget_s) {
        o.pass = false;
        o.detail += " (over the " + format_number(budget_s) + " s budget)";
    }
    failures += o.pass ? 0 : 1;
    std::ostringstream t;
    t.precision(3);
    t << std::fixed << secs;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  [" << t.str() << " s]  "
              << o.detail << std::endl;
}

NoiseConfig uniform(double h, double t = kT) {
    NoiseConfig c;
    c.n = kN;
    c.t = t;
    c.angle_mode = AngleMode::uniform_angle;
    c.uniform_h = h;
    return c;
}

std::vector<DensityMatrix> test_states(const ClassifierModel &m, const Dataset &d) {
    std::vector<DensityMatrix> out;
    for (const auto &x : d.features) {
        out.push_back(m.encoding().encode(x));
    }
    return out;
}

Outcome formula_suite() {
    int bad = 0;
    std::string which;
    auto expect = [&](bool ok, const char *what) {
        if (!ok) {
            ++bad;
            which += std::string(" ") + what;
        }
    };
    auto near = [](double a, double b) { return std::abs(a - b) <= kFormulaTol; };
    expect(margin_condition_ok(0.9, 0.0, 3), "margin(0.9,0)");
    expect(!margin_condition_ok(0.66, 0.1, 3), "margin(0.66)");
    expect(margin_condition_ok(0.67, 0.1, 3), "margin(0.67)");
    expect(noise_sample_complexity(0.5, 0.0, 3, 0.95) == 2, "N(h=0)");
    expect(noise_sample_complexity(0.5, 0.1, 3, 0.95) == 17, "N(h=0.1)");
    expect(noise_sample_complexity(0.5, 0.1, 3, 0.999) > noise_sample_complexity(0.5, 0.1, 3, 0.95),
           "N monotone in beta");
    expect(privacy_epsilon(0.0, 0.5, 3) == 0.0, "eps(0)");
    expect(near(privacy_epsilon(0.1, 0.5, 3), std::log(1.8)), "eps=ln1.8");
    expect(near(privacy_epsilon(0.1, 0.5, 3), 0.5877866649), "eps~0.58779");
    expect(privacy_epsilon(0.2, 0.6, 3) < privacy_epsilon(0.2, 0.5, 3), "eps decreasing in t");
    expect(near(certified_tau(4.0, 0.5, 3), 0.125), "radius(B=4)");
    expect(certified_tau(1.0, 0.5, 3) == 0.0, "radius(B=1)");
    expect(certified_tau(9.0, 1.0, 1) == 1.0, "radius clamp");
    const std::vector<double> y{0.9, 0.1};
    expect(certified_exact(y, 0.0), "exact eps=0");
    expect(!certified_exact(y, std::log(3.0)), "exact boundary");
    expect(!certified_exact(std::vector<double>{0.5, 0.5}, 0.7), "exact tie");
    const auto v = certified_finite_sample(y, 0.0, 0.05, 1000);
    expect(v.certified, "finite-sample true");
    expect(near(v.confidence, 1 - 2 * std::exp(-5.0)), "confidence");
    expect(std::abs(v.confidence - 0.98652) < 5e-6, "confidence~0.98652");
    expect(!certified_finite_sample(y, 0.0, 0.4, 1000).certified, "finite-sample wide zeta");
    CertifySampling s;
    const auto conf = certify_from_probabilities(y, y, uniform(0.1), s);
    expect(near(conf.tau_d, 0.25), "report tau_d=0.25");
    const auto tie = certify_from_probabilities(std::vector<double>{0.5, 0.5},
                                                std::vector<double>{0.5, 0.5}, uniform(0.1), s);
    expect(tie.verdict == Verdict::not_certified && tie.tau_d == 0.0, "tie report");
    const auto t0 = certify_from_probabilities(y, y, uniform(0.1, 0.0), s);
    expect(t0.verdict == Verdict::uncertifiable_t_zero, "t=0 report");
    return {bad == 0, bad == 0 ? "24 worked values reproduced" : "mismatch:" + which};
}

Outcome simulator_oracles() {
    Rng rng(2024);
    double worst_circuit = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.below(3);
        const std::size_t n_params = 1 + rng.below(4);
        const auto spec = support::random_circuit(n, 1 + rng.below(16), n_params, rng);
        const auto params = support::random_params(n_params, rng);
        const auto rho = support::random_state(n, rng);
        const auto want = oracle::conjugate(support::oracle_unitary(spec, params),
                                            support::to_oracle(rho.matrix()));
        worst_circuit = std::max(
            worst_circuit,
            oracle::max_diff(support::to_oracle(apply_circuit(spec, params, rho).matrix()), want));
    }
    double worst_expansion = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rng.below(4);
        const auto h = support::random_hermitian(std::size_t{1} << n, rng);
        const auto e = hermitian_eigen(h);
        std::vector<complex_t> diag(e.values.size());
        for (auto &d : diag) {
            d = rng.uniform();
        }
        const auto effect =
            support::to_oracle(e.vectors * ComplexMatrix::diagonal(diag) * e.vectors.adjoint());
        const auto sigma = support::random_state(n, rng);
        std::vector<double> angles(n);
        for (auto &a : angles) {
            a = rng.uniform(0.0, 1.2);
        }
        auto y_oracle = [&](const oracle::Mat &r) {
            return oracle::trace(oracle::mul(effect, r)).real();
        };
        LabelProbabilities y_lib = [&](const DensityMatrix &r) {
            const double p = y_oracle(support::to_oracle(r.matrix()));
            return std::vector<double>{p, 1 - p};
        };
        const double want =
            oracle::subset_expansion(y_oracle, support::to_oracle(sigma.matrix()), angles);
        const double got = tangent_expansion(y_lib, sigma, NoiseSample::from_angles(angles), 0);
        worst_expansion = std::max(worst_expansion, std::abs(got - want));
    }
    const bool ok = worst_circuit <= kCircuitTol && worst_expansion <= kExpansionTol;
    return {ok, "max circuit deviation " + format_number(worst_circuit) +
                    ", max expansion deviation " + format_number(worst_expansion)};
}

Outcome gradient_check() {
    Rng rng(77);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n_data = 1 + rng.below(3);
        const std::size_t n_params = 1 + rng.below(6);
        const auto spec = support::random_circuit(n_data + 1, 4 + rng.below(14), n_params, rng);
        EncodingScheme enc;
        enc.num_qubits = n_data;
        enc.feature_min.assign(n_data, 0.0);
        enc.feature_max.assign(n_data, 1.0);
        const ClassifierModel m(spec, support::random_params(n_params, rng), enc);
        const auto sigma = support::random_state(n_data, rng);
        const auto grad = class_probability_gradient(m, sigma);
        for (std::size_t j = 0; j < n_params; ++j) {
            auto plus = m.params();
            auto minus = m.params();
            plus[j] += kFdStep;
            minus[j] -= kFdStep;
            const auto yp = predict_exact(m.with_params(plus), sigma);
            const auto ym = predict_exact(m.with_params(minus), sigma);
            for (std::size_t k = 0; k < kNumClasses; ++k) {
                worst = std::max(worst, std::abs(grad[k][j] - (yp[k] - ym[k]) / (2 * kFdStep)));
            }
        }
    }
    return {worst <= kGradTol, "max |shift - central difference| " + format_number(worst)};
}

Outcome margin_condition_check(const ClassifierModel &m, const std::vector<DensityMatrix> &states) {
    std::vector<NoiseConfig> configs{uniform(kH4), uniform(kH8), uniform(kH16)};
    NoiseConfig tb;
    tb.n = kN;
    tb.angle_mode = AngleMode::tan_bounded;
    tb.h1 = 0.02;
    tb.h2 = 0.1;
    configs.push_back(tb);
    std::size_t violations = 0;
    std::string detail;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        const auto &cfg = configs[ci];
        const NoisyObservable noisy(m, cfg, 4096, derive_seed(99, streams::kNoise, ci));
        std::size_t qualifying = 0;
        for (const auto &s : states) {
            const auto y = predict_exact(m, s);
            const std::size_t c = argmax(y);
            if (!margin_condition_ok(y[c], cfg.margin_h(), cfg.n)) {
                continue;
            }
            ++qualifying;
            violations += argmax(noisy.probabilities(s)) != c;
        }
        detail += (ci ? ", " : "") + std::string(to_string(cfg.angle_mode)) + " h=" +
                  format_number(cfg.angle_mode == AngleMode::uniform_angle ? cfg.uniform_h
                                                                           : cfg.h1) +
                  ": " + std::to_string(qualifying) + " inputs";
    }
    return {violations == 0, std::to_string(violations) + " violations (" + detail + ")"};
}

Outcome radius_soundness(const ClassifierModel &m, const std::vector<DensityMatrix> &states) {
    const NoiseConfig cfg = uniform(kH4);
    const NoisyObservable noisy(m, cfg, 4096, derive_seed(5, streams::kNoise, 0));
    CertifySampling exact;
    std::size_t certified = 0, inside_flips = 0, outside_flips = 0;
    double min_tau = 1.0, max_tau = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto rep =
            certify_from_probabilities(predict_exact(m, states[i]), noisy.probabilities(states[i]),
                                       cfg, exact);
        if (rep.verdict != Verdict::certified) {
            continue;
        }
        ++certified;
        min_tau = std::min(min_tau, rep.tau_d);
        max_tau = std::max(max_tau, rep.tau_d);
        const std::uint64_t seed = derive_seed(5, streams::kAttack, i);
        inside_flips += attack_search(noisy, states[i], rep.tau_d, 1000, seed).flipped;
        outside_flips +=
            attack_search(noisy, states[i], std::min(1.0, 4 * rep.tau_d), 1000, seed).flipped;
    }
    const bool ok = certified > 0 && inside_flips == 0 && outside_flips > 0;
    return {ok, std::to_string(certified) + "/" + std::to_string(states.size()) +
                    " certified (tau_d " + format_number(min_tau) + ".." +
                    format_number(max_tau) + "), flips inside " +
                    std::to_string(inside_flips) + ", flips at 4x radius " +
                    std::to_string(outside_flips)};
}

Outcome dp_audit(const ClassifierModel &m) {
    const NoiseConfig cfg = uniform(kH4);
    const auto rep = audit_dp(m, cfg, 0.1, 500, derive_seed(6, streams::kAudit, 0), 4096);
    const bool ok = rep.violations.empty() && rep.pairs_evaluated == 500;
    return {ok, std::to_string(rep.pairs_evaluated) + " pairs (" +
                    std::to_string(rep.pairs_skipped) + " skipped by the t^n check), max |ln ratio| " +
                    format_number(rep.max_abs_log_ratio) + " vs epsilon " +
                    format_number(rep.analytic_epsilon) + ", " +
                    std::to_string(rep.violations.size()) + " violations"};
}

Outcome sweep_reproduction(const ClassifierModel &m) {
    const fs::path dir = fs::current_path() / "acceptance_sweep";
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_model(m, dir / "model.json");
    const auto resolved = resolve_config(
        std::nullopt, {"output_dir=" + (dir / "out").string(),
                       "model_path=" + (dir / "model.json").string(), "master_seed=2024"});
    std::ostringstream log;
    const RunContext ctx{resolved, parse_config(resolved), log};
    if (cmd_sweep(ctx) != kExitOk) {
        return {false, "sweep command failed"};
    }
    const auto table = read_csv_table(dir / "out" / "sweep.csv");
    const auto &sw = *ctx.config.sweep;
    if (table.rows.size() != sw.h_values.size() * sw.shot_sizes.size() * sw.repeats) {
        return {false, "unexpected row count " + std::to_string(table.rows.size())};
    }
    double worst_gap = 0.0;
    // spread[h][shots] = max - min of acc_noisy over repeats
    std::map<double, std::map<std::uint64_t, std::pair<double, double>>> range;
    for (const auto &row : table.rows) {
        const double h = std::stod(row[0]);
        const auto shots = std::stoull(row[1]);
        const double clean = std::stod(row[3]);
        const double noisy = std::stod(row[4]);
        if (h == kH16 && shots == 100000) {
            worst_gap = std::max(worst_gap, std::abs(noisy - clean));
        }
        auto [it, fresh] = range[h].try_emplace(shots, noisy, noisy);
        if (!fresh) {
            it->second.first = std::min(it->second.first, noisy);
            it->second.second = std::max(it->second.second, noisy);
        }
    }
    auto median_spread = [&](double h) {
        std::vector<double> s;
        for (const auto &[shots, mm] : range[h]) {
            s.push_back(mm.second - mm.first);
        }
        std::sort(s.begin(), s.end());
        return s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
    };
    const double spread4 = median_spread(kH4);
    const double spread16 = median_spread(kH16);
    const bool ok = worst_gap <= kSweepGapTol && spread4 >= spread16;
    return {ok, "max |noisy - noiseless| at h=2pi/2^16, 1e5 shots: " + format_number(worst_gap) +
                    "; median spread h=2pi/2^4 " + format_number(spread4) + " vs h=2pi/2^16 " +
                    format_number(spread16)};
}

Outcome t_zero_cli(const ClassifierModel &m) {
    const fs::path dir = fs::current_path() / "acceptance_t0";
    fs::remove_all(dir);
    fs::create_directories(dir);
    save_model(m, dir / "model.json");
    const std::string cmd = "'" ROTCERT_CLI_PATH "' certify --index 0 --set noise.t=0 --set output_dir='" +
                            (dir / "out").string() + "' --set model_path='" +
                            (dir / "model.json").string() + "' > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    const int status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    const auto rep = json::parse(read_file(dir / "out" / "certify" / "input_0.json"));
    const std::string verdict = rep.at("verdict").get<std::string>();
    return {status == kExitUncertifiable && verdict == "uncertifiable_t_zero",
            "exit " + std::to_string(status) + ", verdict " + verdict};
}

}  // namespace

int main() {
    std::cout << "rotcert acceptance (t=" << kT << ", n=" << kN << ")" << std::endl;
    criterion("formula suite reproduces the worked values (tol 1e-9)", 1.0, formula_suite);
    criterion("simulator matches unitary-product and subset-enumeration oracles", 30.0,
              simulator_oracles);
    criterion("parameter-shift gradients match central differences", 60.0, gradient_check);

    const auto &model = reference::model();
    const auto test = reference::test_set();
    const auto states = test_states(model, test);
    std::cout << "reference model: test accuracy "
              << format_number(accuracy(model, test, std::nullopt, 0)) << std::endl;

    criterion("margin condition keeps the noisy label (n_noise 4096)", 300.0,
              [&] { return margin_condition_check(model, states); });
    criterion("certified radius survives attack, 4x radius does not", 600.0,
              [&] { return radius_soundness(model, states); });
    criterion("privacy audit within the analytic epsilon (500 pairs)", 600.0,
              [&] { return dp_audit(model); });
    criterion("accuracy sweep: negligible small-noise gap, larger spread at large noise", 900.0,
              [&] { return sweep_reproduction(model); });
    criterion("t = 0 is uncertifiable through the CLI (exit 3)", 60.0,
              [&] { return t_zero_cli(model); });
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
