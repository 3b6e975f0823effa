#include "rotcert/rotnoise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rotcert/rng.hpp"
#include "rotcert/summation.hpp"

namespace rotcert {

namespace {

DensityMatrix conjugate_each(const DensityMatrix &state,
                             std::span<const GateOp> ops) {
    ComplexMatrix rho = state.matrix();
    for (const auto &op : ops) {
        conjugate_gate(rho, state.num_qubits(), op, {});
    }
    return DensityMatrix::trusted(state.num_qubits(), std::move(rho));
}

void require_sample_fits(const DensityMatrix &state, const NoiseSample &s) {
    if (s.angles.size() != state.num_qubits()) {
        throw DimensionError("noise sample has " +
                             std::to_string(s.angles.size()) +
                             " angles for a " +
                             std::to_string(state.num_qubits()) +
                             "-qubit state");
    }
}

}  // namespace

void NoiseConfig::validate(bool for_certification) const {
    if (n < 1) {
        throw std::invalid_argument("noise: n must be >= 1");
    }
    if (angle_mode == AngleMode::tan_bounded) {
        if (!(h1 >= 0.0 && h1 < h2) || !std::isfinite(h2)) {
            throw std::invalid_argument("noise: need 0 <= h1 < h2 (finite)");
        }
    } else if (!(uniform_h > 0.0 && uniform_h < std::numbers::pi / 2.0)) {
        throw std::invalid_argument("noise: uniform_h must be in (0, pi/2)");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("noise: t must be >= 0");
    }
    if (for_certification && t == 0.0) {
        throw std::invalid_argument("noise: certification requires t > 0");
    }
}

double NoiseConfig::margin_h() const {
    return angle_mode == AngleMode::tan_bounded ? h1 : std::tan(uniform_h);
}

std::string_view to_string(AngleMode mode) {
    return mode == AngleMode::tan_bounded ? "tan_bounded" : "uniform_angle";
}

nlohmann::json to_json(const NoiseConfig &cfg) {
    return {{"n", cfg.n},
            {"h1", cfg.h1},
            {"h2", cfg.h2},
            {"t", cfg.t},
            {"angle_mode", std::string(to_string(cfg.angle_mode))},
            {"uniform_h", cfg.uniform_h}};
}

NoiseConfig noise_config_from_json(const nlohmann::json &j) {
    NoiseConfig cfg;
    cfg.n = j.value("n", cfg.n);
    cfg.h1 = j.value("h1", cfg.h1);
    cfg.h2 = j.value("h2", cfg.h2);
    cfg.t = j.value("t", cfg.t);
    cfg.uniform_h = j.value("uniform_h", cfg.uniform_h);
    const auto mode = j.value("angle_mode", std::string("uniform_angle"));
    if (mode == "tan_bounded") {
        cfg.angle_mode = AngleMode::tan_bounded;
    } else if (mode == "uniform_angle") {
        cfg.angle_mode = AngleMode::uniform_angle;
    } else {
        throw std::invalid_argument("noise: unknown angle_mode '" + mode + "'");
    }
    return cfg;
}

NoiseSample NoiseSample::from_angles(std::vector<double> angles) {
    double g = 1.0;
    for (double a : angles) {
        g *= std::cos(a);
    }
    return {std::move(angles), g};
}

NoiseSample sample_noise(const NoiseConfig &cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    std::vector<double> angles(cfg.n);
    for (auto &theta : angles) {
        if (cfg.angle_mode == AngleMode::uniform_angle) {
            do {
                theta = rng.uniform(0.0, cfg.uniform_h);
            } while (theta <= 0.0);
            continue;
        }
        // open interval (h1, h2) on tan(theta)
        theta = std::atan(0.5 * (cfg.h1 + cfg.h2));
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double candidate = std::atan(rng.uniform(cfg.h1, cfg.h2));
            const double tv = std::tan(candidate);
            if (tv > cfg.h1 && tv < cfg.h2) {
                theta = candidate;
                break;
            }
        }
    }
    return NoiseSample::from_angles(std::move(angles));
}

NoiseSample noise_draw(const NoiseConfig &cfg, std::uint64_t seed,
                       std::size_t index) {
    return sample_noise(cfg, derive_seed(seed, streams::kNoise, index));
}

DensityMatrix apply_rotation_noise(const DensityMatrix &state,
                                   const NoiseSample &sample) {
    require_sample_fits(state, sample);
    std::vector<GateOp> ops;
    ops.reserve(sample.angles.size());
    for (std::size_t q = 0; q < sample.angles.size(); ++q) {
        ops.push_back(GateOp::fixed_rotation(GateKind::RX, q, sample.angles[q]));
    }
    return conjugate_each(state, ops);
}

std::vector<double> noisy_predict_mc(const ClassifierModel &model,
                                     const DensityMatrix &sigma,
                                     std::span<const NoiseSample> samples,
                                     std::optional<std::uint64_t> n_shots,
                                     std::uint64_t seed) {
    if (samples.empty()) {
        throw std::invalid_argument("noisy_predict_mc: n_noise must be >= 1");
    }
    if (n_shots && *n_shots < 1) {
        throw std::invalid_argument("noisy_predict_mc: n_shots must be >= 1");
    }
    std::vector<CompensatedSum> sums(model.povm().num_outcomes());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const DensityMatrix rotated = apply_rotation_noise(sigma, samples[i]);
        const auto probs =
            n_shots ? predict_shots(model, rotated, *n_shots,
                                    derive_seed(seed, streams::kShots, i))
                          .estimate
                    : predict_exact(model, rotated);
        for (std::size_t k = 0; k < sums.size(); ++k) {
            sums[k].add(probs[k]);
        }
    }
    std::vector<double> out;
    out.reserve(sums.size());
    for (const auto &s : sums) {
        out.push_back(
            std::clamp(s.value() / static_cast<double>(samples.size()), 0.0, 1.0));
    }
    return out;
}

std::vector<double> noisy_predict_mc(const ClassifierModel &model,
                                     const DensityMatrix &sigma,
                                     const NoiseConfig &cfg,
                                     std::size_t n_noise,
                                     std::optional<std::uint64_t> n_shots,
                                     std::uint64_t seed) {
    cfg.validate();
    if (n_noise < 1) {
        throw std::invalid_argument("noisy_predict_mc: n_noise must be >= 1");
    }
    if (cfg.n != sigma.num_qubits()) {
        throw DimensionError("noise config covers " + std::to_string(cfg.n) +
                             " qubits, input has " +
                             std::to_string(sigma.num_qubits()));
    }
    std::vector<NoiseSample> samples;
    samples.reserve(n_noise);
    for (std::size_t i = 0; i < n_noise; ++i) {
        samples.push_back(noise_draw(cfg, seed, i));
    }
    return noisy_predict_mc(model, sigma, samples, n_shots, seed);
}

NoisyObservable::NoisyObservable(const ClassifierModel &model,
                                 std::span<const NoiseSample> samples)
    : data_qubits_(model.data_qubits()) {
    if (samples.empty()) {
        throw std::invalid_argument("NoisyObservable: no noise draws");
    }
    const auto bare = effective_effects(model);
    const std::size_t dim = bare.front().rows();
    // Each accumulator entry is summed with compensation.
    std::vector<std::vector<CompensatedSum>> re(
        bare.size(), std::vector<CompensatedSum>(dim * dim));
    std::vector<std::vector<CompensatedSum>> im(
        bare.size(), std::vector<CompensatedSum>(dim * dim));
    std::vector<GateOp> undo(data_qubits_);
    for (const auto &s : samples) {
        if (s.angles.size() != data_qubits_) {
            throw DimensionError("NoisyObservable: sample does not match the "
                                 "data register");
        }
        for (std::size_t q = 0; q < data_qubits_; ++q) {
            undo[q] = GateOp::fixed_rotation(GateKind::RX, q, -s.angles[q]);
        }
        for (std::size_t k = 0; k < bare.size(); ++k) {
            // R^dagger A R = RX(-theta) A RX(-theta)^dagger
            ComplexMatrix m = bare[k];
            for (const auto &op : undo) {
                conjugate_gate(m, data_qubits_, op, {});
            }
            for (std::size_t e = 0; e < dim * dim; ++e) {
                re[k][e].add(m.data()[e].real());
                im[k][e].add(m.data()[e].imag());
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (std::size_t k = 0; k < bare.size(); ++k) {
        ComplexMatrix avg(dim, dim);
        for (std::size_t e = 0; e < dim * dim; ++e) {
            avg.data()[e] = complex_t{re[k][e].value() * inv,
                                      im[k][e].value() * inv};
        }
        effects_.push_back(std::move(avg));
    }
}

namespace {
std::vector<NoiseSample> draw_all(const NoiseConfig &cfg, std::size_t n_noise,
                                  std::uint64_t seed) {
    cfg.validate();
    std::vector<NoiseSample> samples;
    samples.reserve(n_noise);
    for (std::size_t i = 0; i < n_noise; ++i) {
        samples.push_back(noise_draw(cfg, seed, i));
    }
    return samples;
}
}  // namespace

NoisyObservable::NoisyObservable(const ClassifierModel &model,
                                 const NoiseConfig &cfg, std::size_t n_noise,
                                 std::uint64_t seed)
    : NoisyObservable(model, draw_all(cfg, n_noise, seed)) {}

std::vector<double>
NoisyObservable::probabilities(const DensityMatrix &sigma) const {
    if (sigma.num_qubits() != data_qubits_) {
        throw DimensionError("NoisyObservable: input has the wrong qubit count");
    }
    const std::size_t dim = sigma.dim();
    std::vector<double> out;
    out.reserve(effects_.size());
    for (const auto &m : effects_) {
        double p = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                p += (m(i, j) * sigma(j, i)).real();
            }
        }
        out.push_back(std::clamp(p, 0.0, 1.0));
    }
    return out;
}

DensityMatrix flip_qubits(const DensityMatrix &sigma,
                          std::span<const std::size_t> qubits) {
    std::vector<GateOp> ops;
    ops.reserve(qubits.size());
    for (auto q : qubits) {
        ops.push_back(GateOp::fixed(GateKind::X, q));
    }
    return conjugate_each(sigma, ops);
}

double tangent_expansion(const LabelProbabilities &y_fn,
                         const DensityMatrix &sigma, const NoiseSample &sample,
                         std::size_t k) {
    require_sample_fits(sigma, sample);
    const std::size_t n = sample.angles.size();
    double total = y_fn(sigma).at(k);
    // subsets of size l as increasing index tuples
    for (std::size_t l = 1; l <= n; ++l) {
        std::vector<std::size_t> idx(l);
        for (std::size_t i = 0; i < l; ++i) {
            idx[i] = i;
        }
        for (;;) {
            double weight = 1.0;
            for (auto q : idx) {
                weight *= std::tan(sample.angles[q]);
            }
            total += weight * y_fn(flip_qubits(sigma, idx)).at(k);

            std::size_t pos = l;
            while (pos > 0 && idx[pos - 1] == n - l + (pos - 1)) {
                --pos;
            }
            if (pos == 0) {
                break;
            }
            ++idx[pos - 1];
            for (std::size_t i = pos; i < l; ++i) {
                idx[i] = idx[i - 1] + 1;
            }
        }
    }
    return sample.weight_g * total;
}

double tangent_expansion_product(const LabelProbabilities &y_fn,
                           const DensityMatrix &sigma,
                           const NoiseSample &sample, std::size_t k) {
    require_sample_fits(sigma, sample);
    double prod = 1.0;
    for (std::size_t q = 0; q < sample.angles.size(); ++q) {
        const std::size_t one[] = {q};
        prod *= 1.0 + std::tan(sample.angles[q]) * y_fn(flip_qubits(sigma, one)).at(k);
    }
    return sample.weight_g * (y_fn(sigma).at(k) + prod - 1.0);
}

}  // namespace rotcert
