#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace tps {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using Ket = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;

/// Zero-based mode index into a ModeLayout.
struct ModeIndex {
    std::size_t value;
    constexpr explicit ModeIndex(std::size_t v) : value(v) {}
    constexpr bool operator==(const ModeIndex&) const = default;
};

class LayoutError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Per-mode truncation of a multimode Fock space.
///
/// Basis ordering: mode 0 is the slowest-varying index, so the basis index of
/// |m_0, m_1, ..., m_{M-1}> is ((m_0 d_1 + m_1) d_2 + m_2) ... .
class ModeLayout {
public:
    ModeLayout() = default;
    explicit ModeLayout(std::vector<std::size_t> dims);

    std::size_t mode_count() const { return dims_.size(); }
    std::size_t dim(std::size_t mode) const { return dims_.at(mode); }
    /// Highest representable photon number of a mode.
    std::size_t cutoff(std::size_t mode) const { return dims_.at(mode) - 1; }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t total_dim() const { return total_; }

    std::size_t index_of(std::span<const std::size_t> occupations) const;
    std::vector<std::size_t> occupations_of(std::size_t index) const;
    /// Photon number of `mode` in basis state `index`.
    std::size_t occupation(std::size_t index, std::size_t mode) const;

    /// Same layout with every dimension grown by `extra`.
    ModeLayout grown(std::size_t extra) const;

    bool operator==(const ModeLayout&) const = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 0;
};

/// Complex sparse matrix on the composite space of a layout.
class SparseOperator {
public:
    SparseOperator() = default;
    SparseOperator(ModeLayout layout, SpMat matrix);

    const ModeLayout& layout() const { return layout_; }
    const SpMat& matrix() const { return matrix_; }
    std::size_t dim() const { return layout_.total_dim(); }

    SparseOperator adjoint() const;
    SparseOperator hermitian_part() const;
    SparseOperator antihermitian_part() const;

    Ket apply(const Ket& v) const { return matrix_ * v; }
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix_); }

    /// Largest entrywise modulus of A - A^dagger.
    double hermiticity_error() const;

    friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b);
    friend SparseOperator operator*(cplx s, const SparseOperator& a);
    friend SparseOperator operator*(const SparseOperator& a, cplx s) { return s * a; }

private:
    ModeLayout layout_;
    SpMat matrix_;
};

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b);

/// Pure ket or density matrix on a layout.
class QuantumState {
public:
    static QuantumState pure(ModeLayout layout, Ket psi);
    static QuantumState mixed(ModeLayout layout, DensityMatrix rho);

    const ModeLayout& layout() const { return layout_; }
    bool is_pure() const { return std::holds_alternative<Ket>(data_); }
    const Ket& ket() const { return std::get<Ket>(data_); }
    const DensityMatrix& density() const { return std::get<DensityMatrix>(data_); }
    /// Density matrix, forming |psi><psi| for pure states.
    DensityMatrix to_density() const;

    /// ||psi||^2 for pure states, tr(rho) otherwise.
    double norm_squared() const;
    /// Checks the normalization / positivity invariants at `tol`.
    bool is_valid(double tol = 1e-10) const;

private:
    QuantumState(ModeLayout layout, std::variant<Ket, DensityMatrix> data)
        : layout_(std::move(layout)), data_(std::move(data)) {}

    ModeLayout layout_;
    std::variant<Ket, DensityMatrix> data_;
};

// Single-mode building blocks (dimension d).
SpMat single_annihilation(std::size_t d);
SpMat single_identity(std::size_t d);
/// a^n on one mode with entries sqrt(m!/(m-n)!) computed in one step.
SpMat single_annihilation_power(std::size_t d, std::size_t n);

/// Tensor embedding of single-mode factors; identity on unlisted modes.
SparseOperator compose(std::span<const std::pair<ModeIndex, SpMat>> factors,
                       const ModeLayout& layout);
SparseOperator identity(const ModeLayout& layout);
SparseOperator annihilation(const ModeLayout& layout, ModeIndex mode);
SparseOperator creation(const ModeLayout& layout, ModeIndex mode);
SparseOperator number(const ModeLayout& layout, ModeIndex mode);
/// a_mode^n.
SparseOperator annihilation_power(const ModeLayout& layout, ModeIndex mode, std::size_t n);

QuantumState vacuum(const ModeLayout& layout);
/// Coherent amplitude alpha on `mode`, vacuum elsewhere; renormalized after truncation.
QuantumState coherent(const ModeLayout& layout, ModeIndex mode, cplx alpha);
/// Truncated, renormalized coherent amplitudes on a single mode.
Ket coherent_amplitudes(std::size_t d, cplx alpha);
/// True when dimension d is too small for amplitude alpha.
bool coherent_undertruncated(std::size_t d, cplx alpha);

/// Tensor product of states living on disjoint groups of modes.
/// Each factor is (ascending mode list, density matrix over those modes in
/// layout order); together the groups must cover every mode exactly once.
QuantumState product_state(const ModeLayout& layout,
                           const std::vector<std::pair<std::vector<std::size_t>, DensityMatrix>>& factors);

}  // namespace tps
