#pragma once

// Certified-robustness mathematics for the rotation-smoothed classifier and
// the empirical harnesses (privacy audit, attack search) that probe it.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotcert/qla.hpp"
#include "rotcert/rng.hpp"
#include "rotcert/rotnoise.hpp"
#include "rotcert/vqc.hpp"

namespace rotcert {

/// Noiseless margin condition y_c > (1+h)^n / 2 under which rotation noise
/// cannot change the predicted label.
bool margin_condition_ok(double y_c, double h, std::size_t n);

/// Shots needed so the noisy estimate keeps the label with probability beta:
///   ceil( ln(2/(1-beta)) / (8 (xi - (1+h)^n + 1)^2) ), at least 1.
/// Throws std::domain_error when xi - (1+h)^n + 1 <= 0.
std::uint64_t noise_sample_complexity(double xi, double h, std::size_t n,
                                      double beta);

/// Privacy budget ln(1 + tau_d / t^n). Throws std::domain_error for t = 0.
double privacy_epsilon(double tau_d, double t, std::size_t n);

/// (sqrt(B) - 1) t^n clamped to [0, 1]. Throws std::domain_error for t = 0.
double certified_tau(double B, double t, std::size_t n);

/// Largest entry > e^{2 eps} * second largest.
bool certified_exact(std::span<const double> y_noisy, double epsilon);

struct FiniteSampleVerdict {
    bool certified = false;
    double confidence = 0.0;  // 1 - 2 exp(-2 N zeta^2), clamped to [0, 1]
};

/// (y_C - zeta) > e^{2 eps} max_{k != C} (y_k + zeta) on shot estimates.
FiniteSampleVerdict certified_finite_sample(std::span<const double> y_est,
                                       double epsilon, double zeta,
                                       std::uint64_t n_samples);

enum class Verdict { certified, not_certified, uncertifiable_t_zero };
std::string_view to_string(Verdict v);

struct CertifySampling {
    std::size_t n_noise = 4096;
    std::optional<std::uint64_t> n_shots;  // nullopt: exact per-draw probabilities
    double zeta = 0.05;
    double beta = 0.95;
};

struct CertificationReport {
    std::size_t predicted_class = 0;
    std::vector<double> y_noiseless;
    std::vector<double> y_noisy;
    double xi = 0.0;
    double B = 1.0;
    std::optional<double> epsilon;
    double tau_d = 0.0;
    double tau_d_supremum = 0.0;
    std::optional<std::uint64_t> n_required;
    double beta = 0.0;
    double zeta = 0.0;
    std::optional<double> confidence;
    bool margin_condition = false;
    double t_power = 0.0;
    bool t_lower_bound_ok = false;
    bool exact_check = false;
    std::optional<bool> finite_sample_check;
    Verdict verdict = Verdict::not_certified;
    std::vector<std::string> notes;
    nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json to_json(const CertificationReport &r);

/// Certification math from already-estimated probabilities.
CertificationReport certify_from_probabilities(std::span<const double> y_noiseless,
                                               std::span<const double> y_noisy,
                                               const NoiseConfig &cfg,
                                               const CertifySampling &sampling);

/// Estimates ỹ with noisy_predict_mc and certifies the input.
CertificationReport certify_input(const ClassifierModel &model,
                                  const DensityMatrix &sigma,
                                  const NoiseConfig &cfg,
                                  const CertifySampling &sampling,
                                  std::uint64_t seed);

// Random states used by the empirical harnesses ---------------------------

/// Ginibre-distributed mixed state of the given rank (1 = Haar pure state).
DensityMatrix random_density_matrix(std::size_t num_qubits, std::size_t rank,
                                    Rng &rng);
/// exp(i * scale * H / |H|) for a GUE-distributed H.
ComplexMatrix random_unitary(std::size_t dim, double scale, Rng &rng);

/// Point on the segment sigma -> candidate at trace distance <= tau from
/// sigma (the candidate itself when already inside).
DensityMatrix pull_into_ball(const DensityMatrix &sigma,
                             const DensityMatrix &candidate, double tau);

struct DpViolation {
    std::size_t pair = 0;
    std::size_t k = 0;
    double abs_log_ratio = 0.0;
    double distance = 0.0;
};

struct DpAuditReport {
    double tau_d = 0.0;
    double analytic_epsilon = 0.0;
    double max_abs_log_ratio = 0.0;
    std::size_t pairs_evaluated = 0;
    std::size_t pairs_skipped = 0;  // t^n lower bound failed on sigma or rho
    std::vector<DpViolation> violations;
};

nlohmann::json to_json(const DpAuditReport &r);

/// Samples state pairs at trace distance <= tau_d and records the worst
/// |ln(ỹ_k(rho) / ỹ_k(sigma))| over pairs whose states both satisfy
/// ỹ_k >= t^n.
DpAuditReport audit_dp(const NoisyObservable &noisy, const NoiseConfig &cfg,
                       double tau_d, std::size_t n_pairs, std::uint64_t seed);
DpAuditReport audit_dp(const ClassifierModel &model, const NoiseConfig &cfg,
                       double tau_d, std::size_t n_pairs, std::uint64_t seed,
                       std::size_t n_noise = 1024);

struct AttackResult {
    bool flipped = false;
    std::size_t label = 0;             // noisy label of sigma
    double base_margin = 0.0;          // ỹ_label - max other, at sigma
    double worst_margin = 0.0;         // same quantity at worst_rho
    double worst_distance = 0.0;
    std::optional<DensityMatrix> worst_rho;
    std::size_t evaluations = 0;
};

/// Random restarts plus greedy local search over states within trace
/// distance tau_d of sigma, minimizing the noisy label margin.
AttackResult attack_search(const NoisyObservable &noisy,
                           const DensityMatrix &sigma, double tau_d,
                           std::size_t budget, std::uint64_t seed);
AttackResult attack_search(const ClassifierModel &model,
                           const DensityMatrix &sigma, const NoiseConfig &cfg,
                           double tau_d, std::size_t budget, std::uint64_t seed,
                           std::size_t n_noise = 1024);

}  // namespace rotcert
