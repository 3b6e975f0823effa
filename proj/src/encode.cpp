#include "rotcert/encode.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "rotcert/rng.hpp"

namespace rotcert {

namespace {

std::vector<std::string> split_commas(const std::string &line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_double(const std::string &s, double &out) {
    const char *first = s.data();
    const char *last = s.data() + s.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last && std::isfinite(out);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

}  // namespace

void Dataset::validate() const {
    if (features.size() != labels.size()) {
        throw std::invalid_argument("Dataset '" + name +
                                    "': features and labels differ in length");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != features.front().size()) {
            throw std::invalid_argument("Dataset '" + name + "': row " +
                                        std::to_string(i) +
                                        " has a different dimension");
        }
        if (labels[i] != 0 && labels[i] != 1) {
            throw std::invalid_argument("Dataset '" + name + "': label " +
                                        std::to_string(labels[i]) +
                                        " outside {0,1}");
        }
        double norm = 0.0;
        for (double v : features[i]) {
            norm += v * v;
        }
        if (norm == 0.0) {
            throw std::invalid_argument("Dataset '" + name + "': row " +
                                        std::to_string(i) + " is all zeros");
        }
    }
}

StateVector amplitude_encode(std::span<const double> x,
                             std::size_t num_qubits) {
    const std::size_t dim = checked_dim(num_qubits);
    if (x.size() > dim) {
        throw DimensionError("amplitude_encode: " + std::to_string(x.size()) +
                             " features do not fit in " +
                             std::to_string(num_qubits) + " qubits");
    }
    double norm2 = 0.0;
    for (double v : x) {
        norm2 += v * v;
    }
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
        throw std::invalid_argument("amplitude_encode: zero or non-finite vector");
    }
    const double inv = 1.0 / std::sqrt(norm2);
    std::vector<complex_t> amps(dim);
    for (std::size_t i = 0; i < x.size(); ++i) {
        amps[i] = x[i] * inv;
    }
    return {num_qubits, std::move(amps)};
}

StateVector angle_encode(std::span<const double> x) {
    if (x.empty()) {
        throw std::invalid_argument("angle_encode: empty feature vector");
    }
    std::vector<complex_t> amps{1.0};
    for (double v : x) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("angle_encode: feature " +
                                        std::to_string(v) + " outside [0,1]");
        }
        const double c = std::cos(std::numbers::pi * v / 2.0);
        const double s = std::sin(std::numbers::pi * v / 2.0);
        std::vector<complex_t> next;
        next.reserve(amps.size() * 2);
        for (const auto &a : amps) {
            next.push_back(a * c);
            next.push_back(a * s);
        }
        amps = std::move(next);
    }
    return {x.size(), std::move(amps)};
}

DensityMatrix EncodingScheme::encode(std::span<const double> x) const {
    if (kind == EncodingKind::amplitude) {
        return DensityMatrix::from_pure(amplitude_encode(x, num_qubits));
    }
    if (x.size() != num_qubits || feature_min.size() != x.size() ||
        feature_max.size() != x.size()) {
        throw DimensionError("angle encoding expects " +
                             std::to_string(num_qubits) + " features, got " +
                             std::to_string(x.size()));
    }
    std::vector<double> scaled(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double span = feature_max[i] - feature_min[i];
        const double v = span > 0.0 ? (x[i] - feature_min[i]) / span : 0.5;
        scaled[i] = std::clamp(v, 0.0, 1.0);
    }
    return DensityMatrix::from_pure(angle_encode(scaled));
}

EncodingScheme fit_encoding(EncodingKind kind, const Dataset &train,
                            std::size_t num_qubits) {
    train.validate();
    if (train.size() == 0) {
        throw std::invalid_argument("fit_encoding: empty dataset");
    }
    const std::size_t d = train.dim();
    EncodingScheme scheme;
    scheme.kind = kind;
    if (kind == EncodingKind::amplitude) {
        std::size_t needed = 0;
        while ((std::size_t{1} << needed) < d) {
            ++needed;
        }
        scheme.num_qubits = num_qubits == 0 ? std::max<std::size_t>(needed, 1)
                                            : num_qubits;
        if ((std::size_t{1} << scheme.num_qubits) < d) {
            throw DimensionError("amplitude encoding: 2^" +
                                 std::to_string(scheme.num_qubits) + " < " +
                                 std::to_string(d));
        }
        return scheme;
    }
    if (num_qubits != 0 && num_qubits != d) {
        throw DimensionError("angle encoding needs one qubit per feature");
    }
    scheme.num_qubits = d;
    scheme.feature_min.assign(d, std::numeric_limits<double>::infinity());
    scheme.feature_max.assign(d, -std::numeric_limits<double>::infinity());
    for (const auto &row : train.features) {
        for (std::size_t i = 0; i < d; ++i) {
            scheme.feature_min[i] = std::min(scheme.feature_min[i], row[i]);
            scheme.feature_max[i] = std::max(scheme.feature_max[i], row[i]);
        }
    }
    return scheme;
}

std::string_view to_string(EncodingKind kind) {
    return kind == EncodingKind::amplitude ? "amplitude" : "angle";
}

EncodingKind encoding_kind_from_string(std::string_view name) {
    if (name == "amplitude") {
        return EncodingKind::amplitude;
    }
    if (name == "angle") {
        return EncodingKind::angle;
    }
    throw std::invalid_argument("unknown encoding '" + std::string(name) + "'");
}

nlohmann::json to_json(const EncodingScheme &scheme) {
    return {{"kind", std::string(to_string(scheme.kind))},
            {"num_qubits", scheme.num_qubits},
            {"feature_min", scheme.feature_min},
            {"feature_max", scheme.feature_max}};
}

EncodingScheme encoding_from_json(const nlohmann::json &j) {
    EncodingScheme s;
    s.kind = encoding_kind_from_string(j.at("kind").get<std::string>());
    s.num_qubits = j.at("num_qubits").get<std::size_t>();
    s.feature_min = j.value("feature_min", std::vector<double>{});
    s.feature_max = j.value("feature_max", std::vector<double>{});
    return s;
}

Dataset synth_dataset(std::size_t n_samples, std::uint64_t seed,
                      double margin) {
    if (n_samples < 2) {
        throw std::invalid_argument("synth_dataset: need at least 2 samples");
    }
    if (!(margin > 0.0 && margin < 0.5)) {
        throw std::invalid_argument("synth_dataset: margin must be in (0, 0.5)");
    }
    constexpr std::size_t kDim = 3;
    const std::array<double, kDim> raw{1.0, 0.5, -0.75};
    const double len =
        std::sqrt(raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]);
    std::array<double, kDim> dir{};
    for (std::size_t i = 0; i < kDim; ++i) {
        dir[i] = raw[i] / len;
    }
    const double spread = margin / 4.0;
    const double gap = margin / 8.0;

    Dataset data;
    data.name = "synthetic(n=" + std::to_string(n_samples) +
                ",seed=" + std::to_string(seed) + ",margin=" +
                format_double(margin) + ")";
    Rng rng(derive_seed(seed, streams::kData));
    for (std::size_t s = 0; s < n_samples; ++s) {
        const int label = static_cast<int>(s % 2);
        const double sign = label == 0 ? -1.0 : 1.0;
        std::vector<double> x(kDim);
        for (;;) {
            double proj = 0.0;
            bool inside = true;
            for (std::size_t i = 0; i < kDim; ++i) {
                x[i] = 0.5 + sign * (margin / 2.0) * dir[i] + spread * rng.normal();
                inside = inside && x[i] > 0.0 && x[i] < 1.0;
                proj += (x[i] - 0.5) * dir[i];
            }
            if (inside && sign * proj >= gap) {
                break;
            }
        }
        data.features.push_back(std::move(x));
        data.labels.push_back(label);
    }
    return data;
}

Dataset load_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open dataset file " + path.string());
    }
    Dataset data;
    data.name = path.stem().string();
    std::string line;
    std::size_t row = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_commas(line);
        std::vector<double> values;
        values.reserve(fields.size());
        bool numeric = true;
        for (const auto &f : fields) {
            double v = 0.0;
            if (!parse_double(trim(f), v)) {
                numeric = false;
                break;
            }
            values.push_back(v);
        }
        if (!numeric) {
            if (data.size() == 0 && width == 0) {
                width = fields.size();  // header
                continue;
            }
            throw std::runtime_error(path.string() + ": row " +
                                     std::to_string(row) +
                                     " has a non-numeric field");
        }
        if (width == 0) {
            width = fields.size();
        }
        if (fields.size() != width || width < 2) {
            throw std::runtime_error(path.string() + ": row " +
                                     std::to_string(row) + " has " +
                                     std::to_string(fields.size()) +
                                     " fields, expected " +
                                     std::to_string(width));
        }
        const double label = values.back();
        if (label != 0.0 && label != 1.0) {
            throw std::runtime_error(path.string() + ": row " +
                                     std::to_string(row) + " has label " +
                                     trim(fields.back()) + " outside {0,1}");
        }
        values.pop_back();
        data.features.push_back(std::move(values));
        data.labels.push_back(static_cast<int>(label));
    }
    data.validate();
    return data;
}

void save_csv(const Dataset &data, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write dataset file " + path.string());
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.features[i]) {
            out << format_double(v) << ',';
        }
        out << data.labels[i] << '\n';
    }
}

}  // namespace rotcert
