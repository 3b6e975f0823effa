#pragma once

// Gate-level circuits acting on density matrices, POVM read-out and shot
// sampling.
//
// Rotation convention: R_P(theta) = cos(theta/2) I - i sin(theta/2) P.
// Qubit 0 is the most significant bit of the basis index.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rotcert/qla.hpp"

namespace rotcert {

enum class GateKind { RX, RY, RZ, X, Y, Z, H, CNOT };

[[nodiscard]] bool is_rotation(GateKind kind);
[[nodiscard]] std::string_view to_string(GateKind kind);
[[nodiscard]] GateKind gate_kind_from_string(std::string_view name);

struct GateOp {
    GateKind kind = GateKind::X;
    std::size_t target = 0;
    std::optional<std::size_t> control;
    std::optional<std::size_t> param_slot;
    std::optional<double> fixed_angle;

    static GateOp rotation(GateKind kind, std::size_t target, std::size_t slot);
    static GateOp fixed_rotation(GateKind kind, std::size_t target,
                                 double angle);
    static GateOp fixed(GateKind kind, std::size_t target);
    static GateOp cnot(std::size_t control, std::size_t target);

    /// Throws std::invalid_argument when the field combination is illegal.
    void validate() const;

    friend bool operator==(const GateOp &, const GateOp &) = default;
};

class CircuitSpec {
  public:
    CircuitSpec() = default;
    CircuitSpec(std::size_t num_qubits, std::vector<GateOp> ops,
                std::size_t num_params);

    [[nodiscard]] std::size_t num_qubits() const { return num_qubits_; }
    [[nodiscard]] std::size_t num_params() const { return num_params_; }
    [[nodiscard]] const std::vector<GateOp> &ops() const { return ops_; }

    /// Reversed gate order with fixed angles negated. Parameterized rotations
    /// keep their slots; run the result with negated parameters to undo the
    /// original circuit.
    [[nodiscard]] CircuitSpec inverse() const;

    friend bool operator==(const CircuitSpec &, const CircuitSpec &) = default;

  private:
    std::size_t num_qubits_ = 0;
    std::vector<GateOp> ops_;
    std::size_t num_params_ = 0;
};

nlohmann::json to_json(const CircuitSpec &spec);
CircuitSpec circuit_from_json(const nlohmann::json &j);

/// 2x2 unitary, or 4x4 for CNOT in (control, target) basis order. `angle` is
/// required exactly when the op is a rotation bound to a parameter slot.
ComplexMatrix gate_matrix(const GateOp &op, std::optional<double> angle);

/// Angle an op runs with under `params`, or nullopt for fixed gates.
std::optional<double> resolve_angle(const GateOp &op,
                                    std::span<const double> params);

/// In-place rho <- U rho U^dagger for one gate on an n-qubit register.
void conjugate_gate(ComplexMatrix &rho, std::size_t num_qubits,
                    const GateOp &op, std::span<const double> params);

/// In-place m <- U m for one gate (left multiplication only).
void left_apply_gate(ComplexMatrix &m, std::size_t num_qubits,
                     const GateOp &op, std::span<const double> params);

/// Full circuit unitary U = U_k ... U_1.
ComplexMatrix circuit_unitary(const CircuitSpec &spec,
                              std::span<const double> params);

/// rho_out = U rho U^dagger.
DensityMatrix apply_circuit(const CircuitSpec &spec,
                            std::span<const double> params,
                            const DensityMatrix &input);

class Povm {
  public:
    /// Validates each effect PSD and that they sum to the identity (1e-9).
    explicit Povm(std::vector<ComplexMatrix> effects);

    /// Projectors {|k><k|} on one qubit of an n-qubit register.
    static Povm computational(std::size_t num_qubits, std::size_t qubit);

    [[nodiscard]] std::size_t num_outcomes() const { return effects_.size(); }
    [[nodiscard]] std::size_t dim() const { return effects_.front().rows(); }
    [[nodiscard]] const std::vector<ComplexMatrix> &effects() const {
        return effects_;
    }

  private:
    std::vector<ComplexMatrix> effects_;
};

/// p_k = Tr(Pi_k rho), clamped to [0, 1].
std::vector<double> class_probabilities(const DensityMatrix &state,
                                        const Povm &povm);

/// Multinomial draw of n_shots outcomes. Deterministic for a fixed seed.
std::vector<std::uint64_t> sample_shots(std::span<const double> probs,
                                        std::uint64_t n_shots,
                                        std::uint64_t seed);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace rotcert
