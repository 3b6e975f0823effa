#include "rotcert/qla.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rotcert {

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kJacobiMaxSweeps = 100;
constexpr double kPsdSlack = -1e-9;
constexpr double kStateTol = 1e-10;

void require_same_shape(const ComplexMatrix &a, const ComplexMatrix &b,
                        const char *what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shape mismatch (" +
                             std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

// Maps (kept bits, traced bits) back to a full basis index.
std::size_t compose_index(std::size_t kept_bits, std::size_t traced_bits,
                          std::span<const std::size_t> keep,
                          std::span<const std::size_t> traced,
                          std::size_t n) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const std::size_t bit = (kept_bits >> (keep.size() - 1 - k)) & 1U;
        idx |= bit << (n - 1 - keep[k]);
    }
    for (std::size_t k = 0; k < traced.size(); ++k) {
        const std::size_t bit = (traced_bits >> (traced.size() - 1 - k)) & 1U;
        idx |= bit << (n - 1 - traced[k]);
    }
    return idx;
}

}  // namespace

std::size_t checked_dim(std::size_t num_qubits) {
    if (num_qubits > kMaxQubits) {
        throw DimensionError("register of " + std::to_string(num_qubits) +
                             " qubits exceeds the supported maximum of " +
                             std::to_string(kMaxQubits));
    }
    return std::size_t{1} << num_qubits;
}

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, complex_t{0.0, 0.0}) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols,
                             std::vector<complex_t> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) {
        throw DimensionError("ComplexMatrix: expected " +
                             std::to_string(rows * cols) + " entries, got " +
                             std::to_string(data_.size()));
    }
    if (!all_finite()) {
        throw std::invalid_argument("ComplexMatrix: non-finite entry");
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t dim) {
    ComplexMatrix m(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const complex_t> diag) {
    ComplexMatrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m(i, i) = diag[i];
    }
    return m;
}

ComplexMatrix ComplexMatrix::outer(std::span<const complex_t> v,
                                   std::span<const complex_t> w) {
    ComplexMatrix m(v.size(), w.size());
    for (std::size_t r = 0; r < v.size(); ++r) {
        for (std::size_t c = 0; c < w.size(); ++c) {
            m(r, c) = v[r] * std::conj(w[c]);
        }
    }
    return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            out(c, r) = std::conj((*this)(r, c));
        }
    }
    return out;
}

complex_t ComplexMatrix::trace() const {
    complex_t t{0.0, 0.0};
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) {
        t += (*this)(i, i);
    }
    return t;
}

bool ComplexMatrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const complex_t &z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
}

double ComplexMatrix::max_abs() const {
    double m = 0.0;
    for (const auto &z : data_) {
        m = std::max(m, std::abs(z));
    }
    return m;
}

ComplexMatrix &ComplexMatrix::operator+=(const ComplexMatrix &o) {
    require_same_shape(*this, o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += o.data_[i];
    }
    return *this;
}

ComplexMatrix &ComplexMatrix::operator-=(const ComplexMatrix &o) {
    require_same_shape(*this, o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= o.data_[i];
    }
    return *this;
}

ComplexMatrix &ComplexMatrix::operator*=(complex_t s) {
    for (auto &z : data_) {
        z *= s;
    }
    return *this;
}

ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.cols_ != b.rows_) {
        throw DimensionError("matrix product: inner dimensions differ");
    }
    ComplexMatrix out(a.rows_, b.cols_);
    for (std::size_t r = 0; r < a.rows_; ++r) {
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const complex_t ark = a(r, k);
            if (ark == complex_t{0.0, 0.0}) {
                continue;
            }
            for (std::size_t c = 0; c < b.cols_; ++c) {
                out(r, c) += ark * b(k, c);
            }
        }
    }
    return out;
}

double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

ComplexMatrix tensor(const ComplexMatrix &a, const ComplexMatrix &b) {
    const std::size_t rows = a.rows() * b.rows();
    const std::size_t cols = a.cols() * b.cols();
    const std::size_t limit = std::size_t{1} << kMaxQubits;
    if (rows > limit || cols > limit) {
        throw DimensionError("tensor: result of " + std::to_string(rows) +
                             "x" + std::to_string(cols) +
                             " exceeds the supported register size");
    }
    ComplexMatrix out(rows, cols);
    for (std::size_t ar = 0; ar < a.rows(); ++ar) {
        for (std::size_t ac = 0; ac < a.cols(); ++ac) {
            const complex_t s = a(ar, ac);
            for (std::size_t br = 0; br < b.rows(); ++br) {
                for (std::size_t bc = 0; bc < b.cols(); ++bc) {
                    out(ar * b.rows() + br, ac * b.cols() + bc) = s * b(br, bc);
                }
            }
        }
    }
    return out;
}

bool is_hermitian(const ComplexMatrix &m, double tol) {
    if (!m.square()) {
        return false;
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = r; c < m.cols(); ++c) {
            if (std::abs(m(r, c) - std::conj(m(c, r))) > tol) {
                return false;
            }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver (cyclic Jacobi with a phase-adjusted 2x2 rotation)

HermitianEigen hermitian_eigen(const ComplexMatrix &m) {
    if (!m.square()) {
        throw DimensionError("hermitian_eigen: matrix is not square");
    }
    const double scale = std::max(1.0, m.max_abs());
    if (!is_hermitian(m, 1e-9 * scale)) {
        throw std::invalid_argument("hermitian_eigen: matrix is not Hermitian");
    }
    const std::size_t n = m.rows();
    ComplexMatrix a = m;
    ComplexMatrix v = ComplexMatrix::identity(n);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) = a(i, i).real();
    }

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                if (r != c) {
                    s += std::norm(a(r, c));
                }
            }
        }
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        if (off_norm() < kJacobiTol * scale) {
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double r = std::abs(a(p, q));
                if (r < 1e-300) {
                    continue;
                }
                const complex_t phase = a(p, q) / r;
                const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * r);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // J = diag(1, conj(phase)) * [[c, s], [-s, c]]
                const complex_t jpp = c;
                const complex_t jpq = s;
                const complex_t jqp = -s * std::conj(phase);
                const complex_t jqq = c * std::conj(phase);

                for (std::size_t k = 0; k < n; ++k) {
                    const complex_t akp = a(k, p);
                    const complex_t akq = a(k, q);
                    a(k, p) = akp * jpp + akq * jqp;
                    a(k, q) = akp * jpq + akq * jqq;
                    const complex_t vkp = v(k, p);
                    const complex_t vkq = v(k, q);
                    v(k, p) = vkp * jpp + vkq * jqp;
                    v(k, q) = vkp * jpq + vkq * jqq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const complex_t apk = a(p, k);
                    const complex_t aqk = a(q, k);
                    a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
                    a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                a(p, p) = a(p, p).real();
                a(q, q) = a(q, q).real();
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return a(i, i).real() < a(j, j).real();
    });
    HermitianEigen out{std::vector<double>(n), ComplexMatrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]).real();
        for (std::size_t k = 0; k < n; ++k) {
            out.vectors(k, j) = v(k, order[j]);
        }
    }
    return out;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix &m) {
    return hermitian_eigen(m).values;
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(std::size_t num_qubits,
                         std::vector<complex_t> amplitudes)
    : num_qubits_(num_qubits), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != checked_dim(num_qubits)) {
        throw DimensionError("StateVector: expected " +
                             std::to_string(checked_dim(num_qubits)) +
                             " amplitudes, got " +
                             std::to_string(amplitudes_.size()));
    }
    double norm = 0.0;
    for (const auto &z : amplitudes_) {
        norm += std::norm(z);
    }
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kStateTol) {
        throw std::invalid_argument("StateVector: amplitudes are not unit norm");
    }
}

StateVector StateVector::basis(std::size_t num_qubits, std::size_t index) {
    std::vector<complex_t> amps(checked_dim(num_qubits));
    if (index >= amps.size()) {
        throw std::out_of_range("StateVector::basis: index out of range");
    }
    amps[index] = 1.0;
    return {num_qubits, std::move(amps)};
}

StateVector StateVector::tensor(const StateVector &o) const {
    const std::size_t n = num_qubits_ + o.num_qubits_;
    checked_dim(n);
    std::vector<complex_t> amps;
    amps.reserve(dim() * o.dim());
    for (const auto &a : amplitudes_) {
        for (const auto &b : o.amplitudes_) {
            amps.push_back(a * b);
        }
    }
    return {n, std::move(amps)};
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(std::size_t num_qubits, ComplexMatrix matrix)
    : num_qubits_(num_qubits), matrix_(std::move(matrix)) {
    const std::size_t dim = checked_dim(num_qubits);
    if (matrix_.rows() != dim || matrix_.cols() != dim) {
        throw DimensionError("DensityMatrix: expected " + std::to_string(dim) +
                             "x" + std::to_string(dim) + " matrix");
    }
    if (!matrix_.all_finite()) {
        throw std::invalid_argument("DensityMatrix: non-finite entry");
    }
    if (!is_hermitian(matrix_, kStateTol)) {
        throw std::invalid_argument("DensityMatrix: matrix is not Hermitian");
    }
    if (std::abs(matrix_.trace() - 1.0) > kStateTol) {
        throw std::invalid_argument("DensityMatrix: trace is not 1");
    }
    const auto eig = hermitian_eigenvalues(matrix_);
    if (!eig.empty() && eig.front() < kPsdSlack) {
        throw std::invalid_argument(
            "DensityMatrix: negative eigenvalue " + std::to_string(eig.front()));
    }
}

DensityMatrix::DensityMatrix(Trusted, std::size_t num_qubits,
                             ComplexMatrix matrix)
    : num_qubits_(num_qubits), matrix_(std::move(matrix)) {
    const std::size_t dim = checked_dim(num_qubits);
    if (matrix_.rows() != dim || matrix_.cols() != dim) {
        throw DimensionError("DensityMatrix: expected " + std::to_string(dim) +
                             "x" + std::to_string(dim) + " matrix");
    }
}

DensityMatrix DensityMatrix::trusted(std::size_t num_qubits,
                                     ComplexMatrix matrix) {
    return {Trusted{}, num_qubits, std::move(matrix)};
}

DensityMatrix DensityMatrix::from_pure(const StateVector &psi) {
    return trusted(psi.num_qubits(),
                   ComplexMatrix::outer(psi.amplitudes(), psi.amplitudes()));
}

DensityMatrix DensityMatrix::basis(std::size_t num_qubits, std::size_t index) {
    return from_pure(StateVector::basis(num_qubits, index));
}

DensityMatrix DensityMatrix::maximally_mixed(std::size_t num_qubits) {
    const std::size_t dim = checked_dim(num_qubits);
    return trusted(num_qubits, ComplexMatrix::identity(dim) *
                                   complex_t{1.0 / static_cast<double>(dim)});
}

DensityMatrix DensityMatrix::tensor(const DensityMatrix &o) const {
    return trusted(num_qubits_ + o.num_qubits_,
                   rotcert::tensor(matrix_, o.matrix_));
}

DensityMatrix mix(const DensityMatrix &a, const DensityMatrix &b,
                  double lambda) {
    if (a.num_qubits() != b.num_qubits()) {
        throw DimensionError("mix: qubit counts differ");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("mix: lambda outside [0, 1]");
    }
    return DensityMatrix::trusted(a.num_qubits(),
                                  a.matrix() * complex_t{1.0 - lambda} +
                                      b.matrix() * complex_t{lambda});
}

double trace_distance(const DensityMatrix &sigma, const DensityMatrix &rho) {
    if (sigma.num_qubits() != rho.num_qubits()) {
        throw DimensionError("trace_distance: qubit counts differ");
    }
    const auto eig = hermitian_eigenvalues(sigma.matrix() - rho.matrix());
    double s = 0.0;
    for (double l : eig) {
        s += std::abs(l);
    }
    return std::clamp(0.5 * s, 0.0, 1.0);
}

DensityMatrix partial_trace(const DensityMatrix &state,
                            std::span<const std::size_t> keep) {
    const std::size_t n = state.num_qubits();
    if (keep.empty()) {
        throw std::invalid_argument("partial_trace: empty keep set");
    }
    std::vector<std::size_t> kept(keep.begin(), keep.end());
    std::sort(kept.begin(), kept.end());
    if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
        throw std::invalid_argument("partial_trace: duplicate qubit index");
    }
    if (kept.back() >= n) {
        throw std::out_of_range("partial_trace: qubit index " +
                                std::to_string(kept.back()) + " out of range");
    }
    std::vector<std::size_t> traced;
    for (std::size_t q = 0; q < n; ++q) {
        if (!std::binary_search(kept.begin(), kept.end(), q)) {
            traced.push_back(q);
        }
    }
    const std::size_t kdim = std::size_t{1} << kept.size();
    const std::size_t tdim = std::size_t{1} << traced.size();
    ComplexMatrix out(kdim, kdim);
    for (std::size_t i = 0; i < kdim; ++i) {
        for (std::size_t j = 0; j < kdim; ++j) {
            complex_t s{0.0, 0.0};
            for (std::size_t t = 0; t < tdim; ++t) {
                s += state(compose_index(i, t, kept, traced, n),
                           compose_index(j, t, kept, traced, n));
            }
            out(i, j) = s;
        }
    }
    return DensityMatrix::trusted(kept.size(), std::move(out));
}

}  // namespace rotcert
