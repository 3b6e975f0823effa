#pragma once

// Dense complex linear algebra for small quantum registers.
//
// Everything here is sized for at most kMaxQubits qubits; matrices are stored
// row-major. Qubit 0 is the most significant bit of a basis index.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotcert {

using complex_t = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 10;

/// Raised when operand shapes do not agree or exceed kMaxQubits.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class ComplexMatrix {
  public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);
    ComplexMatrix(std::size_t rows, std::size_t cols,
                  std::vector<complex_t> entries);

    static ComplexMatrix identity(std::size_t dim);
    static ComplexMatrix diagonal(std::span<const complex_t> diag);
    /// |v><w|
    static ComplexMatrix outer(std::span<const complex_t> v,
                               std::span<const complex_t> w);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] bool square() const { return rows_ == cols_; }

    complex_t &operator()(std::size_t r, std::size_t c) {
        return data_[r * cols_ + c];
    }
    const complex_t &operator()(std::size_t r, std::size_t c) const {
        return data_[r * cols_ + c];
    }

    [[nodiscard]] std::span<const complex_t> data() const { return data_; }
    [[nodiscard]] std::span<complex_t> data() { return data_; }

    [[nodiscard]] ComplexMatrix adjoint() const;
    [[nodiscard]] complex_t trace() const;
    [[nodiscard]] bool all_finite() const;
    [[nodiscard]] double max_abs() const;

    ComplexMatrix &operator+=(const ComplexMatrix &o);
    ComplexMatrix &operator-=(const ComplexMatrix &o);
    ComplexMatrix &operator*=(complex_t s);

    friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix &b) {
        return a += b;
    }
    friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix &b) {
        return a -= b;
    }
    friend ComplexMatrix operator*(ComplexMatrix a, complex_t s) {
        return a *= s;
    }
    friend ComplexMatrix operator*(complex_t s, ComplexMatrix a) {
        return a *= s;
    }
    friend ComplexMatrix operator*(const ComplexMatrix &a,
                                   const ComplexMatrix &b);
    friend bool operator==(const ComplexMatrix &,
                           const ComplexMatrix &) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<complex_t> data_;
};

/// Largest elementwise |a - b|. Shapes must agree.
double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b);

/// Kronecker product a ⊗ b.
ComplexMatrix tensor(const ComplexMatrix &a, const ComplexMatrix &b);

bool is_hermitian(const ComplexMatrix &m, double tol = 1e-10);

struct HermitianEigen {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // column j is the eigenvector of values[j]
};

/// Cyclic complex Jacobi; throws std::invalid_argument for non-Hermitian input.
HermitianEigen hermitian_eigen(const ComplexMatrix &m);
std::vector<double> hermitian_eigenvalues(const ComplexMatrix &m);

class StateVector {
  public:
    StateVector(std::size_t num_qubits, std::vector<complex_t> amplitudes);

    static StateVector basis(std::size_t num_qubits, std::size_t index);

    [[nodiscard]] std::size_t num_qubits() const { return num_qubits_; }
    [[nodiscard]] std::size_t dim() const { return amplitudes_.size(); }
    [[nodiscard]] std::span<const complex_t> amplitudes() const {
        return amplitudes_;
    }
    [[nodiscard]] complex_t operator[](std::size_t i) const {
        return amplitudes_[i];
    }

    [[nodiscard]] StateVector tensor(const StateVector &o) const;

  private:
    std::size_t num_qubits_;
    std::vector<complex_t> amplitudes_;
};

class DensityMatrix {
  public:
    /// Validates Hermiticity, unit trace and PSD (eigenvalues >= -1e-9).
    DensityMatrix(std::size_t num_qubits, ComplexMatrix matrix);

    static DensityMatrix from_pure(const StateVector &psi);
    static DensityMatrix basis(std::size_t num_qubits, std::size_t index);
    static DensityMatrix maximally_mixed(std::size_t num_qubits);

    /// Skips the eigenvalue check; callers guarantee validity by construction
    /// (unitary conjugation, convex mixture, partial trace).
    static DensityMatrix trusted(std::size_t num_qubits, ComplexMatrix matrix);

    [[nodiscard]] std::size_t num_qubits() const { return num_qubits_; }
    [[nodiscard]] std::size_t dim() const { return matrix_.rows(); }
    [[nodiscard]] const ComplexMatrix &matrix() const { return matrix_; }
    [[nodiscard]] complex_t operator()(std::size_t r, std::size_t c) const {
        return matrix_(r, c);
    }

    [[nodiscard]] DensityMatrix tensor(const DensityMatrix &o) const;

  private:
    struct Trusted {};
    DensityMatrix(Trusted, std::size_t num_qubits, ComplexMatrix matrix);

    std::size_t num_qubits_;
    ComplexMatrix matrix_;
};

/// (1 - lambda) * a + lambda * b, lambda in [0, 1].
DensityMatrix mix(const DensityMatrix &a, const DensityMatrix &b,
                  double lambda);

/// (1/2) sum |eig(sigma - rho)|.
double trace_distance(const DensityMatrix &sigma, const DensityMatrix &rho);

/// Reduced state on the qubits listed in `keep` (kept in ascending order).
DensityMatrix partial_trace(const DensityMatrix &state,
                            std::span<const std::size_t> keep);

/// Throws DimensionError if 2^num_qubits would exceed the supported size.
std::size_t checked_dim(std::size_t num_qubits);

}  // namespace rotcert
