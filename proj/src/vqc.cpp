#include "rotcert/vqc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "rotcert/rng.hpp"

namespace rotcert {

namespace {

constexpr double kShift = std::numbers::pi / 2.0;
constexpr std::size_t kNoShift = static_cast<std::size_t>(-1);

DensityMatrix with_ancilla(const ClassifierModel &model,
                           const DensityMatrix &sigma) {
    if (sigma.num_qubits() != model.data_qubits()) {
        throw DimensionError("classifier expects a " +
                             std::to_string(model.data_qubits()) +
                             "-qubit input, got " +
                             std::to_string(sigma.num_qubits()));
    }
    return sigma.tensor(DensityMatrix::basis(1, 0));
}

// Runs the ansatz with op `shifted_op` (if any) rotated by an extra `shift`.
std::vector<double> run_probs(const ClassifierModel &model,
                              const DensityMatrix &full, std::size_t shifted_op,
                              double shift) {
    const auto &spec = model.ansatz();
    const auto &params = model.params();
    ComplexMatrix rho = full.matrix();
    for (std::size_t i = 0; i < spec.ops().size(); ++i) {
        const GateOp &op = spec.ops()[i];
        if (i == shifted_op) {
            GateOp moved = op;
            moved.param_slot.reset();
            moved.fixed_angle = *resolve_angle(op, params) + shift;
            conjugate_gate(rho, spec.num_qubits(), moved, params);
        } else {
            conjugate_gate(rho, spec.num_qubits(), op, params);
        }
    }
    return class_probabilities(
        DensityMatrix::trusted(spec.num_qubits(), std::move(rho)),
        model.povm());
}

std::vector<double> init_params(std::size_t count, std::uint64_t seed) {
    Rng rng(derive_seed(seed, streams::kTrain, 0));
    std::vector<double> p(count);
    for (auto &v : p) {
        v = rng.uniform(-0.1, 0.1);
    }
    return p;
}

}  // namespace

ClassifierModel::ClassifierModel(CircuitSpec ansatz, std::vector<double> params,
                                 EncodingScheme encoding)
    : ansatz_(std::move(ansatz)),
      params_(std::move(params)),
      encoding_(std::move(encoding)),
      povm_(Povm::computational(std::max<std::size_t>(ansatz_.num_qubits(), 1),
                                std::max<std::size_t>(ansatz_.num_qubits(), 1) -
                                    1)) {
    if (ansatz_.num_qubits() < 1) {
        throw DimensionError("classifier ansatz needs at least the ancilla");
    }
    if (params_.size() != ansatz_.num_params()) {
        throw DimensionError("classifier: " + std::to_string(params_.size()) +
                             " params for an ansatz with " +
                             std::to_string(ansatz_.num_params()) + " slots");
    }
    if (encoding_.num_qubits != data_qubits()) {
        throw DimensionError("classifier: encoding produces " +
                             std::to_string(encoding_.num_qubits) +
                             " qubits but ansatz has " +
                             std::to_string(data_qubits()) + " data qubits");
    }
    for (double p : params_) {
        if (!std::isfinite(p)) {
            throw std::invalid_argument("classifier: non-finite parameter");
        }
    }
}

ClassifierModel ClassifierModel::with_params(std::vector<double> params) const {
    return {ansatz_, std::move(params), encoding_};
}

CircuitSpec make_default_ansatz(std::size_t data_qubits, std::size_t layers) {
    const std::size_t total = data_qubits + 1;
    const std::size_t anc = data_qubits;
    std::vector<GateOp> ops;
    std::size_t slot = 0;
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t q = 0; q < total; ++q) {
            ops.push_back(GateOp::rotation(GateKind::RY, q, slot++));
        }
        if (total >= 2) {
            for (std::size_t q = 0; q < total; ++q) {
                const std::size_t next = (q + 1) % total;
                if (next != q && !(total == 2 && q == 1)) {
                    ops.push_back(GateOp::cnot(q, next));
                }
            }
        }
    }
    for (std::size_t q = 0; q < data_qubits; ++q) {
        ops.push_back(GateOp::cnot(q, anc));
    }
    ops.push_back(GateOp::rotation(GateKind::RY, anc, slot++));
    return {total, std::move(ops), slot};
}

std::vector<double> predict_exact(const ClassifierModel &model,
                                  const DensityMatrix &sigma) {
    return run_probs(model, with_ancilla(model, sigma), kNoShift, 0.0);
}

ShotPrediction predict_shots(const ClassifierModel &model,
                             const DensityMatrix &sigma, std::uint64_t n_shots,
                             std::uint64_t seed) {
    const auto probs = predict_exact(model, sigma);
    ShotPrediction out;
    out.counts = sample_shots(probs, n_shots, seed);
    out.estimate.reserve(out.counts.size());
    for (auto c : out.counts) {
        out.estimate.push_back(static_cast<double>(c) /
                               static_cast<double>(n_shots));
    }
    return out;
}

std::vector<ComplexMatrix> effective_effects(const ClassifierModel &model) {
    const std::size_t n = model.data_qubits();
    const std::size_t ddim = std::size_t{1} << n;
    const ComplexMatrix u = circuit_unitary(model.ansatz(), model.params());
    const ComplexMatrix ud = u.adjoint();
    std::vector<ComplexMatrix> out;
    for (const auto &pi : model.povm().effects()) {
        const ComplexMatrix heis = ud * pi * u;
        ComplexMatrix a(ddim, ddim);
        // ancilla is the least significant bit; project it onto |0>
        for (std::size_t i = 0; i < ddim; ++i) {
            for (std::size_t j = 0; j < ddim; ++j) {
                a(i, j) = heis(i << 1, j << 1);
            }
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<std::vector<double>>
class_probability_gradient(const ClassifierModel &model,
                           const DensityMatrix &sigma) {
    const auto &spec = model.ansatz();
    const DensityMatrix full = with_ancilla(model, sigma);
    std::vector<std::vector<double>> grad(
        model.povm().num_outcomes(), std::vector<double>(spec.num_params(), 0.0));
    for (std::size_t i = 0; i < spec.ops().size(); ++i) {
        const GateOp &op = spec.ops()[i];
        if (!op.param_slot) {
            continue;
        }
        if (!is_rotation(op.kind)) {
            throw std::invalid_argument("parameter-shift: unsupported gate " +
                                        std::string(to_string(op.kind)));
        }
        const auto plus = run_probs(model, full, i, kShift);
        const auto minus = run_probs(model, full, i, -kShift);
        for (std::size_t k = 0; k < plus.size(); ++k) {
            grad[k][*op.param_slot] += 0.5 * (plus[k] - minus[k]);
        }
    }
    return grad;
}

double cross_entropy(std::span<const double> probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
        throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                                " out of range");
    }
    return -std::log(
        std::max(probs[static_cast<std::size_t>(label)], kLossFloor));
}

std::vector<double> parameter_shift_grad(const ClassifierModel &model,
                                         const DensityMatrix &sigma, int label) {
    const auto probs = predict_exact(model, sigma);
    const auto dy = class_probability_gradient(model, sigma);
    const double y = probs[static_cast<std::size_t>(label)];
    std::vector<double> g(model.params().size(), 0.0);
    if (y <= kLossFloor) {
        return g;  // loss is flat at the floor
    }
    for (std::size_t j = 0; j < g.size(); ++j) {
        g[j] = -dy[static_cast<std::size_t>(label)][j] / y;
    }
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    }
    if (epochs < 1) {
        throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    }
    if (patience < 1) {
        throw std::invalid_argument("TrainConfig: patience must be >= 1");
    }
}

double dataset_loss(const ClassifierModel &model, const Dataset &data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        total += cross_entropy(
            predict_exact(model, model.encoding().encode(data.features[i])),
            data.labels[i]);
    }
    return total / static_cast<double>(data.size());
}

TrainResult train(const ClassifierModel &model, const Dataset &data,
                  const TrainConfig &cfg) {
    cfg.validate();
    data.validate();
    if (data.size() == 0) {
        throw std::invalid_argument("train: empty dataset");
    }
    std::vector<DensityMatrix> inputs;
    inputs.reserve(data.size());
    for (const auto &x : data.features) {
        inputs.push_back(model.encoding().encode(x));
    }

    auto evaluate = [&](const ClassifierModel &m, double &loss, double &acc) {
        double l = 0.0;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto p = predict_exact(m, inputs[i]);
            l += cross_entropy(p, data.labels[i]);
            hits += static_cast<int>(argmax(p)) == data.labels[i] ? 1 : 0;
        }
        loss = l / static_cast<double>(inputs.size());
        acc = static_cast<double>(hits) / static_cast<double>(inputs.size());
    };

    std::vector<double> theta =
        cfg.reinitialize ? init_params(model.params().size(), cfg.seed)
                         : model.params();
    ClassifierModel current = model.with_params(theta);
    TrainResult result{current, {}, false};
    double loss = 0.0;
    double acc = 0.0;
    evaluate(current, loss, acc);
    double lr = cfg.learning_rate;
    result.history.push_back({0, loss, acc, lr});
    if (!std::isfinite(loss)) {
        result.diverged = true;
        return result;
    }
    double best_loss = loss;
    std::vector<double> best_theta = theta;
    std::size_t regressions = 0;

    const std::size_t batch =
        cfg.batch_size == 0 ? data.size() : std::min(cfg.batch_size, data.size());
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, streams::kTrain, 1));

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (batch < data.size()) {
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::swap(order[i], order[shuffle_rng.below(i + 1)]);
            }
        }
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            std::vector<double> g(theta.size(), 0.0);
            for (std::size_t b = start; b < stop; ++b) {
                const auto gi = parameter_shift_grad(current, inputs[order[b]],
                                                     data.labels[order[b]]);
                for (std::size_t j = 0; j < g.size(); ++j) {
                    g[j] += gi[j];
                }
            }
            const double scale = lr / static_cast<double>(stop - start);
            for (std::size_t j = 0; j < theta.size(); ++j) {
                theta[j] -= scale * g[j];
            }
            if (!std::all_of(theta.begin(), theta.end(),
                             [](double v) { return std::isfinite(v); })) {
                result.diverged = true;
                result.model = model.with_params(best_theta);
                return result;
            }
            current = model.with_params(theta);
        }
        evaluate(current, loss, acc);
        result.history.push_back({epoch, loss, acc, lr});
        if (!std::isfinite(loss)) {
            result.diverged = true;
            break;
        }
        if (loss < best_loss) {
            best_loss = loss;
            best_theta = theta;
            regressions = 0;
        } else if (++regressions >= cfg.patience) {
            lr /= 2.0;
            regressions = 0;
            theta = best_theta;
            current = model.with_params(theta);
        }
    }
    result.model = model.with_params(best_theta);
    return result;
}

double accuracy(const ClassifierModel &model, const Dataset &data,
                std::optional<std::uint64_t> n_shots, std::uint64_t seed) {
    if (data.size() == 0) {
        throw std::invalid_argument("accuracy: empty dataset");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const DensityMatrix sigma = model.encoding().encode(data.features[i]);
        const auto probs =
            n_shots ? predict_shots(model, sigma, *n_shots,
                                    derive_seed(seed, streams::kShots, i))
                          .estimate
                    : predict_exact(model, sigma);
        hits += static_cast<int>(argmax(probs)) == data.labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

nlohmann::json to_json(const ClassifierModel &model) {
    return {{"format", "rotcert-model"},
            {"version", 1},
            {"num_classes", model.povm().num_outcomes()},
            {"data_qubits", model.data_qubits()},
            {"encoding", to_json(model.encoding())},
            {"ansatz", to_json(model.ansatz())},
            {"params", model.params()}};
}

ClassifierModel model_from_json(const nlohmann::json &j) {
    if (j.value("format", std::string{}) != "rotcert-model") {
        throw std::invalid_argument("not a rotcert model document");
    }
    if (j.value("num_classes", kNumClasses) != kNumClasses) {
        throw std::invalid_argument("only binary classifiers are supported");
    }
    return {circuit_from_json(j.at("ansatz")),
            j.at("params").get<std::vector<double>>(),
            encoding_from_json(j.at("encoding"))};
}

void save_model(const ClassifierModel &model, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write model file " + path.string());
    }
    out << to_json(model).dump(2) << '\n';
}

ClassifierModel load_model(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open model file " + path.string());
    }
    return model_from_json(nlohmann::json::parse(in));
}

}  // namespace rotcert
