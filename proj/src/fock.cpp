#include "tps/fock.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <string>

namespace tps {

ModeLayout::ModeLayout(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw LayoutError("layout needs at least one mode");
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        if (dims_[k] < 2)
            throw LayoutError("mode " + std::to_string(k) + " has dimension < 2");
    }
    strides_.assign(dims_.size(), 1);
    for (std::size_t k = dims_.size() - 1; k > 0; --k) strides_[k - 1] = strides_[k] * dims_[k];
    total_ = strides_[0] * dims_[0];
}

std::size_t ModeLayout::index_of(std::span<const std::size_t> occupations) const {
    if (occupations.size() != dims_.size()) throw LayoutError("occupation vector has wrong length");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        if (occupations[k] >= dims_[k]) throw LayoutError("occupation exceeds cutoff");
        idx += occupations[k] * strides_[k];
    }
    return idx;
}

std::vector<std::size_t> ModeLayout::occupations_of(std::size_t index) const {
    if (index >= total_) throw LayoutError("basis index out of range");
    std::vector<std::size_t> occ(dims_.size());
    for (std::size_t k = 0; k < dims_.size(); ++k) occ[k] = (index / strides_[k]) % dims_[k];
    return occ;
}

std::size_t ModeLayout::occupation(std::size_t index, std::size_t mode) const {
    return (index / strides_.at(mode)) % dims_[mode];
}

ModeLayout ModeLayout::grown(std::size_t extra) const {
    auto d = dims_;
    for (auto& x : d) x += extra;
    return ModeLayout(std::move(d));
}

SparseOperator::SparseOperator(ModeLayout layout, SpMat matrix)
    : layout_(std::move(layout)), matrix_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(layout_.total_dim());
    if (matrix_.rows() != n || matrix_.cols() != n)
        throw LayoutError("operator dimension does not match layout");
    matrix_.makeCompressed();
}

SparseOperator SparseOperator::adjoint() const {
    return {layout_, SpMat(matrix_.adjoint())};
}

SparseOperator SparseOperator::hermitian_part() const {
    return {layout_, SpMat(0.5 * (matrix_ + SpMat(matrix_.adjoint())))};
}

SparseOperator SparseOperator::antihermitian_part() const {
    return {layout_, SpMat(0.5 * (matrix_ - SpMat(matrix_.adjoint())))};
}

double SparseOperator::hermiticity_error() const {
    SpMat d = matrix_ - SpMat(matrix_.adjoint());
    double worst = 0.0;
    for (Eigen::Index k = 0; k < d.outerSize(); ++k)
        for (SpMat::InnerIterator it(d, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
}

static void require_same_layout(const SparseOperator& a, const SparseOperator& b) {
    if (!(a.layout() == b.layout())) throw LayoutError("operators live on different layouts");
}

SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
    require_same_layout(a, b);
    return {a.layout_, SpMat(a.matrix_ + b.matrix_)};
}

SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
    require_same_layout(a, b);
    return {a.layout_, SpMat(a.matrix_ - b.matrix_)};
}

SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
    require_same_layout(a, b);
    return {a.layout_, SpMat(a.matrix_ * b.matrix_)};
}

SparseOperator operator*(cplx s, const SparseOperator& a) {
    return {a.layout_, SpMat(s * a.matrix_)};
}

SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) {
    return a * b - b * a;
}

QuantumState QuantumState::pure(ModeLayout layout, Ket psi) {
    if (static_cast<std::size_t>(psi.size()) != layout.total_dim())
        throw LayoutError("ket dimension does not match layout");
    return {std::move(layout), std::move(psi)};
}

QuantumState QuantumState::mixed(ModeLayout layout, DensityMatrix rho) {
    const auto n = static_cast<Eigen::Index>(layout.total_dim());
    if (rho.rows() != n || rho.cols() != n)
        throw LayoutError("density matrix dimension does not match layout");
    return {std::move(layout), std::move(rho)};
}

DensityMatrix QuantumState::to_density() const {
    if (is_pure()) return ket() * ket().adjoint();
    return density();
}

double QuantumState::norm_squared() const {
    if (is_pure()) return ket().squaredNorm();
    return density().trace().real();
}

bool QuantumState::is_valid(double tol) const {
    if (is_pure()) return std::abs(ket().squaredNorm() - 1.0) < tol;
    const auto& rho = density();
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(rho.trace() - cplx(1.0)) > tol) return false;
    Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

SpMat single_annihilation(std::size_t d) { return single_annihilation_power(d, 1); }

SpMat single_identity(std::size_t d) {
    SpMat id(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    id.setIdentity();
    return id;
}

SpMat single_annihilation_power(std::size_t d, std::size_t n) {
    const auto dd = static_cast<Eigen::Index>(d);
    SpMat a(dd, dd);
    if (n == 0) return single_identity(d);
    std::vector<Eigen::Triplet<cplx>> trip;
    for (std::size_t m = n; m < d; ++m) {
        // m!/(m-n)! is an exact integer in double for every cutoff used here
        double falling = 1.0;
        for (std::size_t j = 0; j < n; ++j) falling *= static_cast<double>(m - j);
        trip.emplace_back(static_cast<Eigen::Index>(m - n), static_cast<Eigen::Index>(m),
                          std::sqrt(falling));
    }
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

namespace {

SpMat kron(const SpMat& a, const SpMat& b) {
    SpMat out(a.rows() * b.rows(), a.cols() * b.cols());
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
    for (Eigen::Index i = 0; i < a.outerSize(); ++i)
        for (SpMat::InnerIterator ia(a, i); ia; ++ia)
            for (Eigen::Index j = 0; j < b.outerSize(); ++j)
                for (SpMat::InnerIterator ib(b, j); ib; ++ib)
                    trip.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                      ia.value() * ib.value());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

}  // namespace

SparseOperator compose(std::span<const std::pair<ModeIndex, SpMat>> factors, const ModeLayout& layout) {
    std::vector<const SpMat*> per_mode(layout.mode_count(), nullptr);
    for (const auto& [mode, op] : factors) {
        if (mode.value >= layout.mode_count()) throw LayoutError("mode index out of range");
        if (per_mode[mode.value] != nullptr) throw LayoutError("duplicate mode in compose");
        const auto d = static_cast<Eigen::Index>(layout.dim(mode.value));
        if (op.rows() != d || op.cols() != d) throw LayoutError("factor dimension does not match layout");
        per_mode[mode.value] = &op;
    }
    SpMat acc;
    for (std::size_t k = 0; k < layout.mode_count(); ++k) {
        SpMat factor = per_mode[k] ? *per_mode[k] : single_identity(layout.dim(k));
        acc = (k == 0) ? factor : kron(acc, factor);
    }
    return {layout, std::move(acc)};
}

SparseOperator identity(const ModeLayout& layout) { return compose({}, layout); }

SparseOperator annihilation_power(const ModeLayout& layout, ModeIndex mode, std::size_t n) {
    if (mode.value >= layout.mode_count()) throw LayoutError("mode index out of range");
    const std::pair<ModeIndex, SpMat> f{mode, single_annihilation_power(layout.dim(mode.value), n)};
    return compose(std::span(&f, 1), layout);
}

SparseOperator annihilation(const ModeLayout& layout, ModeIndex mode) {
    return annihilation_power(layout, mode, 1);
}

SparseOperator creation(const ModeLayout& layout, ModeIndex mode) {
    return annihilation(layout, mode).adjoint();
}

SparseOperator number(const ModeLayout& layout, ModeIndex mode) {
    if (mode.value >= layout.mode_count()) throw LayoutError("mode index out of range");
    const auto d = layout.dim(mode.value);
    SpMat n(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t m = 0; m < d; ++m)
        n.insert(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) = static_cast<double>(m);
    const std::pair<ModeIndex, SpMat> f{mode, n};
    return compose(std::span(&f, 1), layout);
}

QuantumState vacuum(const ModeLayout& layout) {
    Ket psi = Ket::Zero(static_cast<Eigen::Index>(layout.total_dim()));
    psi(0) = 1.0;
    return QuantumState::pure(layout, std::move(psi));
}

bool coherent_undertruncated(std::size_t d, cplx alpha) {
    const double n = std::norm(alpha);
    return static_cast<double>(d) < n + 6.0 * std::sqrt(n + 1.0);
}

Ket coherent_amplitudes(std::size_t d, cplx alpha) {
    Ket c(static_cast<Eigen::Index>(d));
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (std::size_t m = 1; m < d; ++m)
        c(static_cast<Eigen::Index>(m)) = c(static_cast<Eigen::Index>(m - 1)) * alpha / std::sqrt(static_cast<double>(m));
    return c / c.norm();
}

QuantumState coherent(const ModeLayout& layout, ModeIndex mode, cplx alpha) {
    if (mode.value >= layout.mode_count()) throw LayoutError("mode index out of range");
    const auto d = layout.dim(mode.value);
    if (alpha != 0.0 && coherent_undertruncated(d, alpha))
        std::cerr << "warning: mode " << mode.value << " dimension " << d
                  << " under-truncates coherent amplitude |alpha|^2=" << std::norm(alpha) << "\n";
    const Ket c = coherent_amplitudes(d, alpha);
    Ket psi = Ket::Zero(static_cast<Eigen::Index>(layout.total_dim()));
    std::vector<std::size_t> occ(layout.mode_count(), 0);
    for (std::size_t m = 0; m < d; ++m) {
        occ[mode.value] = m;
        psi(static_cast<Eigen::Index>(layout.index_of(occ))) = c(static_cast<Eigen::Index>(m));
    }
    return QuantumState::pure(layout, std::move(psi));
}

QuantumState product_state(const ModeLayout& layout,
                           const std::vector<std::pair<std::vector<std::size_t>, DensityMatrix>>& factors) {
    const std::size_t modes = layout.mode_count();
    std::vector<int> owner(modes, -1);
    for (std::size_t f = 0; f < factors.size(); ++f) {
        const auto& group = factors[f].first;
        if (!std::is_sorted(group.begin(), group.end())) throw LayoutError("factor modes must be ascending");
        std::size_t d = 1;
        for (auto m : group) {
            if (m >= modes || owner[m] != -1) throw LayoutError("factor modes overlap or are out of range");
            owner[m] = static_cast<int>(f);
            d *= layout.dim(m);
        }
        if (factors[f].second.rows() != static_cast<Eigen::Index>(d) ||
            factors[f].second.cols() != static_cast<Eigen::Index>(d))
            throw LayoutError("factor matrix dimension mismatch");
    }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end())
        throw LayoutError("factors must cover every mode");

    const std::size_t total = layout.total_dim();
    // local index of each global basis state within each factor
    std::vector<std::vector<Eigen::Index>> local(factors.size(), std::vector<Eigen::Index>(total));
    for (std::size_t i = 0; i < total; ++i) {
        const auto occ = layout.occupations_of(i);
        for (std::size_t f = 0; f < factors.size(); ++f) {
            Eigen::Index idx = 0;
            for (auto m : factors[f].first)
                idx = idx * static_cast<Eigen::Index>(layout.dim(m)) + static_cast<Eigen::Index>(occ[m]);
            local[f][i] = idx;
        }
    }
    DensityMatrix rho(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = 0; j < total; ++j) {
            cplx v = 1.0;
            for (std::size_t f = 0; f < factors.size(); ++f) v *= factors[f].second(local[f][i], local[f][j]);
            rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    return QuantumState::mixed(layout, std::move(rho));
}

}  // namespace tps
