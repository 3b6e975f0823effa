#pragma once

// Ancilla-read variational binary classifier.
//
// The register is [data qubits..., ancilla]; the ancilla starts in |0> and the
// class label is read from its computational-basis measurement.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rotcert/circuit.hpp"
#include "rotcert/encode.hpp"
#include "rotcert/qla.hpp"

namespace rotcert {

inline constexpr std::size_t kNumClasses = 2;
inline constexpr double kLossFloor = 1e-9;

class ClassifierModel {
  public:
    ClassifierModel(CircuitSpec ansatz, std::vector<double> params,
                    EncodingScheme encoding);

    [[nodiscard]] const CircuitSpec &ansatz() const { return ansatz_; }
    [[nodiscard]] const std::vector<double> &params() const { return params_; }
    [[nodiscard]] const Povm &povm() const { return povm_; }
    [[nodiscard]] const EncodingScheme &encoding() const { return encoding_; }
    [[nodiscard]] std::size_t data_qubits() const {
        return ansatz_.num_qubits() - 1;
    }
    [[nodiscard]] std::size_t ancilla() const { return data_qubits(); }

    [[nodiscard]] ClassifierModel with_params(std::vector<double> params) const;

  private:
    CircuitSpec ansatz_;
    std::vector<double> params_;
    EncodingScheme encoding_;
    Povm povm_;
};

/// `layers` blocks of RY on every qubit followed by a CNOT ring, then a CNOT
/// from each data qubit into the ancilla and a closing RY on the ancilla.
CircuitSpec make_default_ansatz(std::size_t data_qubits, std::size_t layers);

/// y_k = Tr(Pi_k U (sigma ⊗ |0><0|) U^dagger).
std::vector<double> predict_exact(const ClassifierModel &model,
                                  const DensityMatrix &sigma);

struct ShotPrediction {
    std::vector<double> estimate;
    std::vector<std::uint64_t> counts;
};

ShotPrediction predict_shots(const ClassifierModel &model,
                             const DensityMatrix &sigma, std::uint64_t n_shots,
                             std::uint64_t seed);

/// Data-register effects A_k with y_k(sigma) = Tr(A_k sigma).
std::vector<ComplexMatrix> effective_effects(const ClassifierModel &model);

/// d y_k / d theta_j by the two-term shift rule, summed over every gate that
/// reads slot j. Result is indexed [k][j].
std::vector<std::vector<double>>
class_probability_gradient(const ClassifierModel &model,
                           const DensityMatrix &sigma);

double cross_entropy(std::span<const double> probs, int label);

/// Gradient of cross_entropy(predict_exact(...), label).
std::vector<double> parameter_shift_grad(const ClassifierModel &model,
                                         const DensityMatrix &sigma, int label);

struct TrainConfig {
    double learning_rate = 0.3;
    std::size_t epochs = 40;
    std::size_t batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 0;
    bool reinitialize = true;  // draw params in (-0.1, 0.1); else continue
    std::size_t patience = 3;  // consecutive regressions before halving

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    ClassifierModel model;
    std::vector<EpochStats> history;  // entry 0 is the starting point
    bool diverged = false;
};

TrainResult train(const ClassifierModel &model, const Dataset &data,
                  const TrainConfig &cfg);

/// Mean cross-entropy with exact probabilities.
double dataset_loss(const ClassifierModel &model, const Dataset &data);

/// Fraction of samples whose argmax prediction (ties to class 0) matches the
/// label. nullopt shots means exact probabilities.
double accuracy(const ClassifierModel &model, const Dataset &data,
                std::optional<std::uint64_t> n_shots, std::uint64_t seed);

nlohmann::json to_json(const ClassifierModel &model);
ClassifierModel model_from_json(const nlohmann::json &j);
void save_model(const ClassifierModel &model, const std::filesystem::path &path);
ClassifierModel load_model(const std::filesystem::path &path);

}  // namespace rotcert
