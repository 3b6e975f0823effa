#include "rotcert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rotcert {

namespace {

// Radii from B are strict upper bounds; reported radii sit just inside.
constexpr double kRadiusBackoff = 1e-9;

double second_largest_excluding(std::span<const double> y, std::size_t c) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (k != c) {
            best = std::max(best, y[k]);
        }
    }
    return best;
}

void require_probability_vector(std::span<const double> y, const char *what) {
    if (y.size() < 2) {
        throw std::invalid_argument(std::string(what) +
                                    ": need at least two class probabilities");
    }
}

nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double margin_of(std::span<const double> y, std::size_t label) {
    return y[label] - second_largest_excluding(y, label);
}

}  // namespace

bool margin_condition_ok(double y_c, double h, std::size_t n) {
    return y_c > std::pow(1.0 + h, static_cast<double>(n)) / 2.0;
}

std::uint64_t noise_sample_complexity(double xi, double h, std::size_t n,
                                      double beta) {
    if (!(xi > 0.0 && xi <= 1.0)) {
        throw std::domain_error("sample complexity: xi must be in (0, 1]");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw std::domain_error("sample complexity: beta must be in (0, 1)");
    }
    const double slack = xi - std::pow(1.0 + h, static_cast<double>(n)) + 1.0;
    if (!(slack > 0.0)) {
        throw std::domain_error(
            "sample complexity: noise too large for the margin "
            "(xi - (1+h)^n + 1 <= 0)");
    }
    const double n_real = std::log(2.0 / (1.0 - beta)) / (8.0 * slack * slack);
    if (!std::isfinite(n_real) ||
        n_real >= static_cast<double>(std::numeric_limits<std::uint64_t>::max())) {
        throw std::domain_error("sample complexity: unbounded");
    }
    return std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(n_real)));
}

double privacy_epsilon(double tau_d, double t, std::size_t n) {
    if (!(tau_d >= 0.0 && tau_d <= 1.0)) {
        throw std::domain_error("privacy budget: tau_d must be in [0, 1]");
    }
    if (!(t > 0.0)) {
        throw std::domain_error("privacy budget: t must be > 0");
    }
    return std::log1p(tau_d / std::pow(t, static_cast<double>(n)));
}

double certified_tau(double B, double t, std::size_t n) {
    if (!(B > 0.0)) {
        throw std::domain_error("certified radius: B must be > 0");
    }
    if (!(t > 0.0)) {
        throw std::domain_error("certified radius: t must be > 0");
    }
    if (std::isinf(B)) {
        return 1.0;
    }
    const double r = (std::sqrt(B) - 1.0) * std::pow(t, static_cast<double>(n));
    return std::clamp(r, 0.0, 1.0);
}

bool certified_exact(std::span<const double> y_noisy, double epsilon) {
    require_probability_vector(y_noisy, "certified_exact");
    const std::size_t c = argmax(y_noisy);
    return y_noisy[c] >
           std::exp(2.0 * epsilon) * second_largest_excluding(y_noisy, c);
}

FiniteSampleVerdict certified_finite_sample(std::span<const double> y_est,
                                       double epsilon, double zeta,
                                       std::uint64_t n_samples) {
    require_probability_vector(y_est, "certified_finite_sample");
    if (!(zeta > 0.0)) {
        throw std::invalid_argument("certified_finite_sample: zeta must be > 0");
    }
    if (n_samples < 1) {
        throw std::invalid_argument("certified_finite_sample: need >= 1 sample");
    }
    const std::size_t c = argmax(y_est);
    FiniteSampleVerdict v;
    v.certified = y_est[c] - zeta > std::exp(2.0 * epsilon) *
                                        (second_largest_excluding(y_est, c) + zeta);
    v.confidence = std::clamp(
        1.0 - 2.0 * std::exp(-2.0 * static_cast<double>(n_samples) * zeta * zeta),
        0.0, 1.0);
    return v;
}

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::not_certified: return "not_certified";
    case Verdict::uncertifiable_t_zero: return "uncertifiable_t_zero";
    }
    return "?";
}

nlohmann::json to_json(const CertificationReport &r) {
    nlohmann::json j;
    j["verdict"] = std::string(to_string(r.verdict));
    j["predicted_class"] = r.predicted_class;
    j["y_noiseless"] = r.y_noiseless;
    j["y_noisy"] = r.y_noisy;
    j["xi"] = r.xi;
    j["B"] = finite_or_null(r.B);
    j["epsilon"] = r.epsilon ? finite_or_null(*r.epsilon) : nullptr;
    j["tau_d"] = r.tau_d;
    j["tau_d_supremum"] = r.tau_d_supremum;
    j["n_required"] = r.n_required ? nlohmann::json(*r.n_required) : nullptr;
    j["beta"] = r.beta;
    j["zeta"] = r.zeta;
    j["confidence"] = r.confidence ? nlohmann::json(*r.confidence) : nullptr;
    j["margin_condition"] = r.margin_condition;
    j["t_power"] = r.t_power;
    j["t_lower_bound_ok"] = r.t_lower_bound_ok;
    j["exact_check"] = r.exact_check;
    j["finite_sample_check"] = r.finite_sample_check ? nlohmann::json(*r.finite_sample_check) : nullptr;
    j["notes"] = r.notes;
    j["provenance"] = r.provenance;
    return j;
}

CertificationReport certify_from_probabilities(std::span<const double> y_noiseless,
                                               std::span<const double> y_noisy,
                                               const NoiseConfig &cfg,
                                               const CertifySampling &sampling) {
    cfg.validate();
    require_probability_vector(y_noisy, "certify");
    require_probability_vector(y_noiseless, "certify");
    CertificationReport r;
    r.y_noiseless.assign(y_noiseless.begin(), y_noiseless.end());
    r.y_noisy.assign(y_noisy.begin(), y_noisy.end());
    r.beta = sampling.beta;
    r.zeta = sampling.zeta;

    const std::size_t clean_label = argmax(y_noiseless);
    r.xi = margin_of(y_noiseless, clean_label);
    const double h = cfg.margin_h();
    r.margin_condition = margin_condition_ok(y_noiseless[clean_label], h, cfg.n);
    try {
        r.n_required = noise_sample_complexity(r.xi, h, cfg.n, sampling.beta);
    } catch (const std::domain_error &e) {
        r.notes.emplace_back(std::string("n_required unavailable: ") + e.what());
    }
    r.notes.emplace_back(
        "n_required uses the noiseless margin xi and omits the draw weight g "
        "that appears in the derivation of the sample-complexity bound");

    r.predicted_class = argmax(y_noisy);
    const double top = y_noisy[r.predicted_class];
    const double other = second_largest_excluding(y_noisy, r.predicted_class);
    r.B = other > 0.0 ? top / other : std::numeric_limits<double>::infinity();

    if (cfg.t == 0.0) {
        r.verdict = Verdict::uncertifiable_t_zero;
        r.notes.emplace_back(
            "t = 0: the privacy budget ln(1 + tau/t^n) diverges and the "
            "certified radius is 0");
        return r;
    }

    r.t_power = std::pow(cfg.t, static_cast<double>(cfg.n));
    const double min_prob = *std::min_element(y_noisy.begin(), y_noisy.end());
    r.t_lower_bound_ok = min_prob >= r.t_power;
    if (!r.t_lower_bound_ok) {
        r.notes.emplace_back("warning: t lower bound violated: min noisy "
                             "probability " +
                             std::to_string(min_prob) + " < t^n = " +
                             std::to_string(r.t_power));
    }

    r.tau_d_supremum = certified_tau(r.B, cfg.t, cfg.n);
    r.tau_d = r.tau_d_supremum * (1.0 - kRadiusBackoff);
    r.epsilon = privacy_epsilon(r.tau_d, cfg.t, cfg.n);
    r.exact_check = certified_exact(y_noisy, *r.epsilon);
    if (r.tau_d > 0.0 && !r.exact_check) {
        // Only a rounding-level tie can get here; anything larger is a bug.
        if (r.B - 1.0 > 1e-9) {
            throw std::logic_error("certify: radius does not satisfy B > e^{2 eps}");
        }
        r.tau_d = 0.0;
        r.epsilon = 0.0;
        r.notes.emplace_back("B is 1 up to rounding; radius set to 0");
    }

    bool ok = r.B > 1.0 && r.t_lower_bound_ok && r.exact_check;
    if (sampling.n_shots) {
        const auto v = certified_finite_sample(y_noisy, *r.epsilon, sampling.zeta,
                                          sampling.n_noise);
        r.finite_sample_check = v.certified;
        r.confidence = v.confidence;
        ok = ok && v.certified;
    }
    r.verdict = ok ? Verdict::certified : Verdict::not_certified;
    return r;
}

CertificationReport certify_input(const ClassifierModel &model,
                                  const DensityMatrix &sigma,
                                  const NoiseConfig &cfg,
                                  const CertifySampling &sampling,
                                  std::uint64_t seed) {
    const auto clean = predict_exact(model, sigma);
    const auto noisy = noisy_predict_mc(model, sigma, cfg, sampling.n_noise,
                                        sampling.n_shots, seed);
    auto r = certify_from_probabilities(clean, noisy, cfg, sampling);
    r.provenance["seed"] = seed;
    r.provenance["n_noise"] = sampling.n_noise;
    r.provenance["n_shots"] =
        sampling.n_shots ? nlohmann::json(*sampling.n_shots) : nullptr;
    return r;
}

// ---------------------------------------------------------------------------
// Random states

DensityMatrix random_density_matrix(std::size_t num_qubits, std::size_t rank,
                                    Rng &rng) {
    const std::size_t dim = checked_dim(num_qubits);
    rank = std::clamp<std::size_t>(rank, 1, dim);
    ComplexMatrix g(dim, rank);
    for (auto &z : g.data()) {
        z = complex_t{rng.normal(), rng.normal()};
    }
    ComplexMatrix rho = g * g.adjoint();
    const double tr = rho.trace().real();
    rho *= complex_t{1.0 / tr};
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) {
            const complex_t avg = 0.5 * (rho(i, j) + std::conj(rho(j, i)));
            rho(i, j) = avg;
            rho(j, i) = std::conj(avg);
        }
        rho(i, i) = rho(i, i).real();
    }
    return DensityMatrix::trusted(num_qubits, std::move(rho));
}

ComplexMatrix random_unitary(std::size_t dim, double scale, Rng &rng) {
    ComplexMatrix h(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        h(i, i) = rng.normal();
        for (std::size_t j = i + 1; j < dim; ++j) {
            const complex_t z{rng.normal() / std::sqrt(2.0),
                              rng.normal() / std::sqrt(2.0)};
            h(i, j) = z;
            h(j, i) = std::conj(z);
        }
    }
    const auto eig = hermitian_eigen(h);
    double norm = 0.0;
    for (double l : eig.values) {
        norm = std::max(norm, std::abs(l));
    }
    std::vector<complex_t> phases;
    phases.reserve(dim);
    for (double l : eig.values) {
        phases.push_back(std::polar(1.0, scale * l / std::max(norm, 1e-300)));
    }
    return eig.vectors * ComplexMatrix::diagonal(phases) * eig.vectors.adjoint();
}

DensityMatrix pull_into_ball(const DensityMatrix &sigma,
                             const DensityMatrix &candidate, double tau) {
    const double d = trace_distance(sigma, candidate);
    if (d <= tau) {
        return candidate;
    }
    // Trace distance is linear along the segment, so the scale is exact.
    return mix(sigma, candidate, tau / d);
}

// ---------------------------------------------------------------------------
// Privacy audit

nlohmann::json to_json(const DpAuditReport &r) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto &x : r.violations) {
        v.push_back({{"pair", x.pair},
                     {"k", x.k},
                     {"abs_log_ratio", x.abs_log_ratio},
                     {"distance", x.distance}});
    }
    return {{"tau_d", r.tau_d},
            {"analytic_epsilon", r.analytic_epsilon},
            {"max_abs_log_ratio", r.max_abs_log_ratio},
            {"pairs_evaluated", r.pairs_evaluated},
            {"pairs_skipped", r.pairs_skipped},
            {"violations", std::move(v)}};
}

DpAuditReport audit_dp(const NoisyObservable &noisy, const NoiseConfig &cfg,
                       double tau_d, std::size_t n_pairs, std::uint64_t seed) {
    cfg.validate(true);
    if (!(tau_d >= 0.0 && tau_d <= 1.0)) {
        throw std::invalid_argument("audit_dp: tau_d must be in [0, 1]");
    }
    DpAuditReport r;
    r.tau_d = tau_d;
    r.analytic_epsilon = privacy_epsilon(tau_d, cfg.t, cfg.n);
    const double floor = std::pow(cfg.t, static_cast<double>(cfg.n));
    const std::size_t nq = noisy.data_qubits();
    const std::size_t dim = checked_dim(nq);
    const std::size_t max_attempts = std::max<std::size_t>(100 * n_pairs, 1000);

    auto valid = [&](const std::vector<double> &y) {
        return *std::min_element(y.begin(), y.end()) >= floor;
    };

    for (std::size_t attempt = 0;
         r.pairs_evaluated < n_pairs && attempt < max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, streams::kAudit, attempt));
        const DensityMatrix sigma =
            random_density_matrix(nq, 1 + rng.below(dim), rng);
        DensityMatrix chi = sigma;
        if (attempt % 2 == 0) {
            chi = random_density_matrix(nq, 1 + rng.below(dim), rng);
        } else {
            const ComplexMatrix u = random_unitary(dim, rng.uniform(0.05, 1.0), rng);
            chi = DensityMatrix::trusted(nq, u * sigma.matrix() * u.adjoint());
        }
        const double d = trace_distance(sigma, chi);
        const double lambda = d > 0.0 ? std::min(1.0, tau_d / d) : 0.0;
        const DensityMatrix rho = mix(sigma, chi, lambda);

        const auto ys = noisy.probabilities(sigma);
        const auto yr = noisy.probabilities(rho);
        if (!valid(ys) || !valid(yr)) {
            ++r.pairs_skipped;
            continue;
        }
        const std::size_t pair = r.pairs_evaluated++;
        const double dist = trace_distance(sigma, rho);
        for (std::size_t k = 0; k < ys.size(); ++k) {
            const double lr = std::abs(std::log(yr[k] / ys[k]));
            r.max_abs_log_ratio = std::max(r.max_abs_log_ratio, lr);
            if (lr > r.analytic_epsilon + 1e-12) {
                r.violations.push_back({pair, k, lr, dist});
            }
        }
    }
    return r;
}

DpAuditReport audit_dp(const ClassifierModel &model, const NoiseConfig &cfg,
                       double tau_d, std::size_t n_pairs, std::uint64_t seed,
                       std::size_t n_noise) {
    const NoisyObservable noisy(model, cfg, n_noise, seed);
    return audit_dp(noisy, cfg, tau_d, n_pairs, seed);
}

// ---------------------------------------------------------------------------
// Attack search

AttackResult attack_search(const NoisyObservable &noisy,
                           const DensityMatrix &sigma, double tau_d,
                           std::size_t budget, std::uint64_t seed) {
    if (!(tau_d >= 0.0 && tau_d <= 1.0)) {
        throw std::invalid_argument("attack_search: tau_d must be in [0, 1]");
    }
    if (budget < 1) {
        throw std::invalid_argument("attack_search: budget must be >= 1");
    }
    const std::size_t nq = sigma.num_qubits();
    const std::size_t dim = sigma.dim();
    const auto base = noisy.probabilities(sigma);

    AttackResult res;
    res.label = argmax(base);
    res.base_margin = margin_of(base, res.label);
    res.worst_margin = res.base_margin;
    res.worst_rho = sigma;
    res.evaluations = 1;
    if (tau_d == 0.0) {
        return res;
    }

    auto consider = [&](const DensityMatrix &cand) {
        const DensityMatrix rho = pull_into_ball(sigma, cand, tau_d);
        const auto y = noisy.probabilities(rho);
        ++res.evaluations;
        const double m = margin_of(y, res.label);
        const bool flips = argmax(y) != res.label;
        if (m < res.worst_margin || flips) {
            res.worst_margin = m;
            res.worst_rho = rho;
            res.worst_distance = trace_distance(sigma, rho);
        }
        res.flipped = res.flipped || flips;
    };

    // Start from the pure state that most favours the runner-up class.
    {
        const auto &eff = noisy.effects();
        std::size_t rival = res.label == 0 ? 1 : 0;
        for (std::size_t k = 0; k < base.size(); ++k) {
            if (k != res.label && base[k] > base[rival]) {
                rival = k;
            }
        }
        const auto eig = hermitian_eigen(eff[rival] - eff[res.label]);
        std::vector<complex_t> v(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = eig.vectors(i, dim - 1);
        }
        consider(DensityMatrix::trusted(nq, ComplexMatrix::outer(v, v)));
    }

    Rng rng(derive_seed(seed, streams::kAttack));
    double step = 0.5;
    while (res.evaluations < budget && !res.flipped) {
        const double u = rng.uniform();
        if (u < 0.25) {
            consider(random_density_matrix(nq, 1 + rng.below(dim), rng));
            continue;
        }
        const double before = res.worst_margin;
        const DensityMatrix &best = *res.worst_rho;
        if (u < 0.65) {
            const ComplexMatrix w = random_unitary(dim, step, rng);
            consider(DensityMatrix::trusted(nq, w * best.matrix() * w.adjoint()));
        } else {
            const DensityMatrix pure = random_density_matrix(nq, 1, rng);
            consider(mix(best, pure, rng.uniform(0.0, step)));
        }
        step = res.worst_margin < before ? std::min(1.0, step * 1.5)
                                         : std::max(1e-3, step * 0.9);
    }
    return res;
}

AttackResult attack_search(const ClassifierModel &model,
                           const DensityMatrix &sigma, const NoiseConfig &cfg,
                           double tau_d, std::size_t budget, std::uint64_t seed,
                           std::size_t n_noise) {
    const NoisyObservable noisy(model, cfg, n_noise, seed);
    return attack_search(noisy, sigma, tau_d, budget, seed);
}

}  // namespace rotcert
