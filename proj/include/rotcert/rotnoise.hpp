#pragma once

// Random-rotation smoothing noise: an RX(theta_i) on every data qubit before
// the classifier, with fresh random angles per execution.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rotcert/qla.hpp"
#include "rotcert/vqc.hpp"

namespace rotcert {

enum class AngleMode {
    tan_bounded,    // theta = arctan(u), u ~ U(h1, h2)
    uniform_angle,  // theta ~ U(0, uniform_h)
};

struct NoiseConfig {
    std::size_t n = 3;
    double h1 = 0.0;
    double h2 = 0.1;
    double t = 0.0;
    AngleMode angle_mode = AngleMode::uniform_angle;
    double uniform_h = 0.0;

    /// Throws std::invalid_argument. `for_certification` additionally
    /// requires t > 0.
    void validate(bool for_certification = false) const;

    /// The h of the margin threshold (1+h)^n / 2 and the sample-complexity
    /// formula: h1 in tan_bounded mode, tan(uniform_h) in uniform mode.
    [[nodiscard]] double margin_h() const;

    friend bool operator==(const NoiseConfig &, const NoiseConfig &) = default;
};

nlohmann::json to_json(const NoiseConfig &cfg);
NoiseConfig noise_config_from_json(const nlohmann::json &j);
std::string_view to_string(AngleMode mode);

struct NoiseSample {
    std::vector<double> angles;
    double weight_g = 1.0;  // prod cos(theta_i)

    static NoiseSample from_angles(std::vector<double> angles);
};

NoiseSample sample_noise(const NoiseConfig &cfg, std::uint64_t seed);

/// The sample for draw `index` of a Monte-Carlo run seeded by `seed`.
NoiseSample noise_draw(const NoiseConfig &cfg, std::uint64_t seed,
                       std::size_t index);

/// RX(theta_i) on qubit i.
DensityMatrix apply_rotation_noise(const DensityMatrix &state,
                                   const NoiseSample &sample);

/// Average of per-draw predictions on the rotated input. With `n_shots`
/// each draw contributes a shot estimate instead of exact probabilities.
std::vector<double> noisy_predict_mc(const ClassifierModel &model,
                                     const DensityMatrix &sigma,
                                     const NoiseConfig &cfg,
                                     std::size_t n_noise,
                                     std::optional<std::uint64_t> n_shots,
                                     std::uint64_t seed);

/// Same average over caller-supplied draws.
std::vector<double> noisy_predict_mc(const ClassifierModel &model,
                                     const DensityMatrix &sigma,
                                     std::span<const NoiseSample> samples,
                                     std::optional<std::uint64_t> n_shots,
                                     std::uint64_t seed);

/// The noisy classifier in the Heisenberg picture: effects averaged over the
/// same draws noisy_predict_mc uses, so ỹ_k(sigma) = Tr(M_k sigma) is one
/// trace per state. Exact-probability counterpart of noisy_predict_mc.
class NoisyObservable {
  public:
    NoisyObservable(const ClassifierModel &model, const NoiseConfig &cfg,
                    std::size_t n_noise, std::uint64_t seed);
    NoisyObservable(const ClassifierModel &model,
                    std::span<const NoiseSample> samples);

    [[nodiscard]] std::vector<double> probabilities(const DensityMatrix &sigma) const;
    [[nodiscard]] const std::vector<ComplexMatrix> &effects() const {
        return effects_;
    }
    [[nodiscard]] std::size_t data_qubits() const { return data_qubits_; }

  private:
    std::size_t data_qubits_ = 0;
    std::vector<ComplexMatrix> effects_;
};

using LabelProbabilities =
    std::function<std::vector<double>(const DensityMatrix &)>;

/// X_S sigma X_S for the qubits in S.
DensityMatrix flip_qubits(const DensityMatrix &sigma,
                          std::span<const std::size_t> qubits);

/// The tangent-weighted superposition expansion
///   g y_k(sigma) + g sum_{S nonempty} (prod_{i in S} tan theta_i) y_k(X_S sigma X_S)
/// with subsets enumerated by size.
double tangent_expansion(const LabelProbabilities &y_fn,
                         const DensityMatrix &sigma, const NoiseSample &sample,
                         std::size_t k);

/// Alternative reading with one probability factor per flipped qubit:
///   g y_k(sigma) + g (prod_i (1 + tan theta_i y_k(X_i sigma X_i)) - 1).
double tangent_expansion_product(const LabelProbabilities &y_fn,
                           const DensityMatrix &sigma,
                           const NoiseSample &sample, std::size_t k);

}  // namespace rotcert
