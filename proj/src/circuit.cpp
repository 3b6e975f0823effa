#include "rotcert/circuit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "rotcert/rng.hpp"

namespace rotcert {

namespace {

constexpr double kPovmTol = 1e-9;
constexpr double kProbTol = 1e-9;

using Mat2 = std::array<complex_t, 4>;  // row-major 2x2

Mat2 single_qubit_matrix(GateKind kind, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    const complex_t i{0.0, 1.0};
    const double r = 1.0 / std::sqrt(2.0);
    switch (kind) {
    case GateKind::RX:
        return {c, -i * s, -i * s, c};
    case GateKind::RY:
        return {c, -s, s, c};
    case GateKind::RZ:
        return {std::polar(1.0, -angle / 2.0), 0.0, 0.0,
                std::polar(1.0, angle / 2.0)};
    case GateKind::X:
        return {0.0, 1.0, 1.0, 0.0};
    case GateKind::Y:
        return {0.0, -i, i, 0.0};
    case GateKind::Z:
        return {1.0, 0.0, 0.0, -1.0};
    case GateKind::H:
        return {r, r, r, -r};
    case GateKind::CNOT:
        break;
    }
    throw std::invalid_argument("single_qubit_matrix: CNOT is two-qubit");
}

std::size_t bit_mask(std::size_t num_qubits, std::size_t qubit) {
    return std::size_t{1} << (num_qubits - 1 - qubit);
}

void check_op_fits(const GateOp &op, std::size_t num_qubits) {
    if (op.target >= num_qubits ||
        (op.control && *op.control >= num_qubits)) {
        throw DimensionError("gate " + std::string(to_string(op.kind)) +
                             " addresses a qubit outside the " +
                             std::to_string(num_qubits) + "-qubit register");
    }
}

void left_apply_2x2(ComplexMatrix &m, std::size_t mask, const Mat2 &u) {
    const std::size_t dim = m.rows();
    for (std::size_t i0 = 0; i0 < dim; ++i0) {
        if ((i0 & mask) != 0) {
            continue;
        }
        const std::size_t i1 = i0 | mask;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const complex_t a = m(i0, c);
            const complex_t b = m(i1, c);
            m(i0, c) = u[0] * a + u[1] * b;
            m(i1, c) = u[2] * a + u[3] * b;
        }
    }
}

void right_apply_adjoint_2x2(ComplexMatrix &m, std::size_t mask,
                             const Mat2 &u) {
    const std::size_t dim = m.cols();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t i0 = 0; i0 < dim; ++i0) {
            if ((i0 & mask) != 0) {
                continue;
            }
            const std::size_t i1 = i0 | mask;
            const complex_t a = m(r, i0);
            const complex_t b = m(r, i1);
            m(r, i0) = a * std::conj(u[0]) + b * std::conj(u[1]);
            m(r, i1) = a * std::conj(u[2]) + b * std::conj(u[3]);
        }
    }
}

void swap_cnot_rows(ComplexMatrix &m, std::size_t cmask, std::size_t tmask) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if ((i & cmask) != 0 && (i & tmask) == 0) {
            for (std::size_t c = 0; c < m.cols(); ++c) {
                std::swap(m(i, c), m(i | tmask, c));
            }
        }
    }
}

void swap_cnot_cols(ComplexMatrix &m, std::size_t cmask, std::size_t tmask) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t i = 0; i < m.cols(); ++i) {
            if ((i & cmask) != 0 && (i & tmask) == 0) {
                std::swap(m(r, i), m(r, i | tmask));
            }
        }
    }
}

}  // namespace

bool is_rotation(GateKind kind) {
    return kind == GateKind::RX || kind == GateKind::RY || kind == GateKind::RZ;
}

std::string_view to_string(GateKind kind) {
    switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::H: return "H";
    case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

GateKind gate_kind_from_string(std::string_view name) {
    for (GateKind k : {GateKind::RX, GateKind::RY, GateKind::RZ, GateKind::X,
                       GateKind::Y, GateKind::Z, GateKind::H, GateKind::CNOT}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown gate kind '" + std::string(name) + "'");
}

GateOp GateOp::rotation(GateKind kind, std::size_t target, std::size_t slot) {
    GateOp op{kind, target, std::nullopt, slot, std::nullopt};
    op.validate();
    return op;
}

GateOp GateOp::fixed_rotation(GateKind kind, std::size_t target,
                              double angle) {
    GateOp op{kind, target, std::nullopt, std::nullopt, angle};
    op.validate();
    return op;
}

GateOp GateOp::fixed(GateKind kind, std::size_t target) {
    GateOp op{kind, target, std::nullopt, std::nullopt, std::nullopt};
    op.validate();
    return op;
}

GateOp GateOp::cnot(std::size_t control, std::size_t target) {
    GateOp op{GateKind::CNOT, target, control, std::nullopt, std::nullopt};
    op.validate();
    return op;
}

void GateOp::validate() const {
    const std::string name(to_string(kind));
    if (is_rotation(kind)) {
        if (param_slot.has_value() == fixed_angle.has_value()) {
            throw std::invalid_argument(
                name + ": exactly one of param_slot / fixed_angle must be set");
        }
        if (fixed_angle && !std::isfinite(*fixed_angle)) {
            throw std::invalid_argument(name + ": non-finite fixed_angle");
        }
    } else if (param_slot || fixed_angle) {
        throw std::invalid_argument(name + " takes no angle");
    }
    if (kind == GateKind::CNOT) {
        if (!control) {
            throw std::invalid_argument("CNOT requires a control qubit");
        }
        if (*control == target) {
            throw std::invalid_argument("CNOT control equals target");
        }
    } else if (control) {
        throw std::invalid_argument(name + " takes no control qubit");
    }
}

CircuitSpec::CircuitSpec(std::size_t num_qubits, std::vector<GateOp> ops,
                         std::size_t num_params)
    : num_qubits_(num_qubits), ops_(std::move(ops)), num_params_(num_params) {
    checked_dim(num_qubits_);
    for (const auto &op : ops_) {
        op.validate();
        check_op_fits(op, num_qubits_);
        if (op.param_slot && *op.param_slot >= num_params_) {
            throw std::invalid_argument(
                "param_slot " + std::to_string(*op.param_slot) +
                " out of range for " + std::to_string(num_params_) +
                " parameters");
        }
    }
}

CircuitSpec CircuitSpec::inverse() const {
    std::vector<GateOp> ops(ops_.rbegin(), ops_.rend());
    for (auto &op : ops) {
        if (op.fixed_angle) {
            op.fixed_angle = -*op.fixed_angle;
        }
    }
    // X, Y, Z, H and CNOT are self-inverse.
    return {num_qubits_, std::move(ops), num_params_};
}

nlohmann::json to_json(const CircuitSpec &spec) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto &op : spec.ops()) {
        nlohmann::json j;
        j["kind"] = std::string(to_string(op.kind));
        j["target"] = op.target;
        j["control"] = op.control ? nlohmann::json(*op.control) : nullptr;
        j["param_slot"] =
            op.param_slot ? nlohmann::json(*op.param_slot) : nullptr;
        j["fixed_angle"] =
            op.fixed_angle ? nlohmann::json(*op.fixed_angle) : nullptr;
        ops.push_back(std::move(j));
    }
    return {{"num_qubits", spec.num_qubits()},
            {"num_params", spec.num_params()},
            {"ops", std::move(ops)}};
}

CircuitSpec circuit_from_json(const nlohmann::json &j) {
    auto opt_index = [](const nlohmann::json &o, const char *key)
        -> std::optional<std::size_t> {
        if (!o.contains(key) || o.at(key).is_null()) {
            return std::nullopt;
        }
        return o.at(key).get<std::size_t>();
    };
    std::vector<GateOp> ops;
    for (const auto &o : j.at("ops")) {
        GateOp op;
        op.kind = gate_kind_from_string(o.at("kind").get<std::string>());
        op.target = o.at("target").get<std::size_t>();
        op.control = opt_index(o, "control");
        op.param_slot = opt_index(o, "param_slot");
        if (o.contains("fixed_angle") && !o.at("fixed_angle").is_null()) {
            op.fixed_angle = o.at("fixed_angle").get<double>();
        }
        ops.push_back(op);
    }
    return {j.at("num_qubits").get<std::size_t>(), std::move(ops),
            j.value("num_params", std::size_t{0})};
}

std::optional<double> resolve_angle(const GateOp &op,
                                    std::span<const double> params) {
    if (op.fixed_angle) {
        return op.fixed_angle;
    }
    if (op.param_slot) {
        if (*op.param_slot >= params.size()) {
            throw DimensionError("parameter slot " +
                                 std::to_string(*op.param_slot) +
                                 " missing from parameter vector");
        }
        return params[*op.param_slot];
    }
    return std::nullopt;
}

ComplexMatrix gate_matrix(const GateOp &op, std::optional<double> angle) {
    op.validate();
    const bool wants_angle = is_rotation(op.kind) && op.param_slot.has_value();
    if (wants_angle && !angle) {
        throw std::invalid_argument(std::string(to_string(op.kind)) +
                                    ": parameterized rotation needs an angle");
    }
    if (!wants_angle && angle) {
        throw std::invalid_argument(std::string(to_string(op.kind)) +
                                    ": superfluous angle");
    }
    if (op.kind == GateKind::CNOT) {
        ComplexMatrix m(4, 4);
        m(0, 0) = 1.0;
        m(1, 1) = 1.0;
        m(2, 3) = 1.0;
        m(3, 2) = 1.0;
        return m;
    }
    const double theta = angle ? *angle : op.fixed_angle.value_or(0.0);
    const Mat2 u = single_qubit_matrix(op.kind, theta);
    return {2, 2, {u.begin(), u.end()}};
}

void conjugate_gate(ComplexMatrix &rho, std::size_t num_qubits,
                    const GateOp &op, std::span<const double> params) {
    check_op_fits(op, num_qubits);
    if (op.kind == GateKind::CNOT) {
        const std::size_t cmask = bit_mask(num_qubits, *op.control);
        const std::size_t tmask = bit_mask(num_qubits, op.target);
        swap_cnot_rows(rho, cmask, tmask);
        swap_cnot_cols(rho, cmask, tmask);
        return;
    }
    const Mat2 u = single_qubit_matrix(
        op.kind, resolve_angle(op, params).value_or(0.0));
    const std::size_t mask = bit_mask(num_qubits, op.target);
    left_apply_2x2(rho, mask, u);
    right_apply_adjoint_2x2(rho, mask, u);
}

void left_apply_gate(ComplexMatrix &m, std::size_t num_qubits,
                     const GateOp &op, std::span<const double> params) {
    check_op_fits(op, num_qubits);
    if (op.kind == GateKind::CNOT) {
        swap_cnot_rows(m, bit_mask(num_qubits, *op.control),
                       bit_mask(num_qubits, op.target));
        return;
    }
    const Mat2 u = single_qubit_matrix(
        op.kind, resolve_angle(op, params).value_or(0.0));
    left_apply_2x2(m, bit_mask(num_qubits, op.target), u);
}

ComplexMatrix circuit_unitary(const CircuitSpec &spec,
                              std::span<const double> params) {
    if (params.size() != spec.num_params()) {
        throw DimensionError("circuit_unitary: expected " +
                             std::to_string(spec.num_params()) +
                             " parameters, got " +
                             std::to_string(params.size()));
    }
    ComplexMatrix u = ComplexMatrix::identity(checked_dim(spec.num_qubits()));
    for (const auto &op : spec.ops()) {
        left_apply_gate(u, spec.num_qubits(), op, params);
    }
    return u;
}

DensityMatrix apply_circuit(const CircuitSpec &spec,
                            std::span<const double> params,
                            const DensityMatrix &input) {
    if (params.size() != spec.num_params()) {
        throw DimensionError("apply_circuit: expected " +
                             std::to_string(spec.num_params()) +
                             " parameters, got " +
                             std::to_string(params.size()));
    }
    if (input.num_qubits() != spec.num_qubits()) {
        throw DimensionError("apply_circuit: circuit has " +
                             std::to_string(spec.num_qubits()) +
                             " qubits, state has " +
                             std::to_string(input.num_qubits()));
    }
    ComplexMatrix rho = input.matrix();
    for (const auto &op : spec.ops()) {
        conjugate_gate(rho, spec.num_qubits(), op, params);
    }
    return DensityMatrix::trusted(spec.num_qubits(), std::move(rho));
}

Povm::Povm(std::vector<ComplexMatrix> effects) : effects_(std::move(effects)) {
    if (effects_.empty()) {
        throw std::invalid_argument("Povm: no effects");
    }
    const std::size_t dim = effects_.front().rows();
    ComplexMatrix sum(dim, dim);
    for (const auto &e : effects_) {
        if (e.rows() != dim || e.cols() != dim) {
            throw DimensionError("Povm: effects differ in dimension");
        }
        const auto eig = hermitian_eigenvalues(e);
        if (eig.front() < -kPovmTol) {
            throw std::invalid_argument("Povm: effect is not PSD");
        }
        sum += e;
    }
    if (max_abs_diff(sum, ComplexMatrix::identity(dim)) > kPovmTol) {
        throw std::invalid_argument("Povm: effects do not sum to identity");
    }
}

Povm Povm::computational(std::size_t num_qubits, std::size_t qubit) {
    const std::size_t dim = checked_dim(num_qubits);
    if (qubit >= num_qubits) {
        throw std::out_of_range("Povm::computational: qubit out of range");
    }
    const std::size_t mask = bit_mask(num_qubits, qubit);
    ComplexMatrix p0(dim, dim);
    ComplexMatrix p1(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        ((i & mask) == 0 ? p0 : p1)(i, i) = 1.0;
    }
    return Povm({std::move(p0), std::move(p1)});
}

std::vector<double> class_probabilities(const DensityMatrix &state,
                                        const Povm &povm) {
    if (state.dim() != povm.dim()) {
        throw DimensionError("class_probabilities: POVM acts on dimension " +
                             std::to_string(povm.dim()) + ", state has " +
                             std::to_string(state.dim()));
    }
    const auto &rho = state.matrix();
    const std::size_t dim = state.dim();
    std::vector<double> probs;
    probs.reserve(povm.num_outcomes());
    for (const auto &e : povm.effects()) {
        // Tr(E rho) = sum_{ij} E_ij rho_ji
        double p = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                p += (e(i, j) * rho(j, i)).real();
            }
        }
        probs.push_back(std::clamp(p, 0.0, 1.0));
    }
    return probs;
}

std::vector<std::uint64_t> sample_shots(std::span<const double> probs,
                                        std::uint64_t n_shots,
                                        std::uint64_t seed) {
    if (probs.empty()) {
        throw std::invalid_argument("sample_shots: empty probability vector");
    }
    if (n_shots < 1) {
        throw std::invalid_argument("sample_shots: n_shots must be >= 1");
    }
    double total = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < -kProbTol || p > 1.0 + kProbTol) {
            throw std::invalid_argument("sample_shots: invalid probability");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > kProbTol) {
        throw std::invalid_argument("sample_shots: probabilities sum to " +
                                    std::to_string(total));
    }
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += std::max(0.0, probs[k]);
        cdf[k] = acc / total;
    }
    cdf.back() = 1.0;

    std::vector<std::uint64_t> counts(probs.size(), 0);
    Rng rng(seed);
    for (std::uint64_t s = 0; s < n_shots; ++s) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        ++counts[static_cast<std::size_t>(
            std::min<std::ptrdiff_t>(it - cdf.begin(),
                                     static_cast<std::ptrdiff_t>(cdf.size()) - 1))];
    }
    return counts;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) {
            best = k;
        }
    }
    return best;
}

}  // namespace rotcert
