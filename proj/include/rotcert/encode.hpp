#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotcert/qla.hpp"

namespace rotcert {

struct Dataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    std::string name;

    [[nodiscard]] std::size_t size() const { return labels.size(); }
    [[nodiscard]] std::size_t dim() const {
        return features.empty() ? 0 : features.front().size();
    }
    /// Equal lengths, uniform dimension, labels in {0,1}, no zero-norm row.
    void validate() const;

    friend bool operator==(const Dataset &, const Dataset &) = default;
};

enum class EncodingKind { amplitude, angle };

/// How a feature vector becomes a data-register state. Angle encoding
/// min-max scales each feature with the stored ranges first.
struct EncodingScheme {
    EncodingKind kind = EncodingKind::angle;
    std::size_t num_qubits = 0;
    std::vector<double> feature_min;
    std::vector<double> feature_max;

    [[nodiscard]] DensityMatrix encode(std::span<const double> x) const;

    friend bool operator==(const EncodingScheme &,
                           const EncodingScheme &) = default;
};

/// Amplitude encoding needs 2^num_qubits >= d (num_qubits 0 picks the
/// smallest such register); angle encoding uses one qubit per feature.
EncodingScheme fit_encoding(EncodingKind kind, const Dataset &train,
                            std::size_t num_qubits = 0);

nlohmann::json to_json(const EncodingScheme &scheme);
EncodingScheme encoding_from_json(const nlohmann::json &j);
std::string_view to_string(EncodingKind kind);
EncodingKind encoding_kind_from_string(std::string_view name);

/// x_i / |x| on |i>, zero padded.
StateVector amplitude_encode(std::span<const double> x, std::size_t num_qubits);

/// Product state of RY(pi x_i)|0>; every x_i must lie in [0, 1].
StateVector angle_encode(std::span<const double> x);

/// Two Gaussian blobs in [0,1]^3 with centres `margin` apart along a fixed
/// direction. Samples closer than margin/8 to the bisecting plane are
/// redrawn, so the classes are always linearly separable. Labels alternate
/// 0,1,0,... giving ceil(n/2) zeros.
Dataset synth_dataset(std::size_t n_samples, std::uint64_t seed, double margin);

/// d feature columns followed by one integer label column; optional header.
Dataset load_csv(const std::filesystem::path &path);
void save_csv(const Dataset &data, const std::filesystem::path &path);

}  // namespace rotcert
