#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tps/fock.hpp"

namespace tps {

/// Split of the three triplet modes into {k} and {l, m}; zero-based, l < m.
struct Bipartition {
    std::size_t k = 0;
    std::size_t l = 1;
    std::size_t m = 2;

    /// Bipartition isolating triplet mode `k` (zero-based).
    static Bipartition isolating(std::size_t k);
    bool operator==(const Bipartition&) const = default;
};

/// Order-n quadrature q^n = (a+^n + a^n)/2, p^n = i(a+^n - a^n)/2 and the
/// Hermitian commutator operator f^n = -i[q^n, p^n].
struct QuadraturePair {
    SparseOperator q;
    SparseOperator p;
    SparseOperator f;
};

/// Quadratures of one mode at order n.
QuadraturePair single_mode_quadratures(const ModeLayout& layout, std::size_t mode, std::size_t n);
/// Built-up quadratures of the pair (l, m): a_l^n a_m^n takes the role of a^n.
QuadraturePair pair_quadratures(const ModeLayout& layout, std::size_t l, std::size_t m, std::size_t n);

/// Basis indices whose photon numbers in `modes` are all <= cutoff - n.
std::vector<std::size_t> interior_indices(const ModeLayout& layout, const std::vector<std::size_t>& modes,
                                          std::size_t n);

struct QuadratureSet {
    std::size_t n = 1;
    Bipartition bipartition;
    SparseOperator q_k, p_k, q_lm, p_lm, f_k, f_lm;

    /// Operators in R^n order (q_k, p_k, q_lm, p_lm).
    std::array<const SparseOperator*, 4> r() const { return {&q_k, &p_k, &q_lm, &p_lm}; }
};

class CutoffError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

QuadratureSet build_quadrature_set(const ModeLayout& layout, std::size_t n, Bipartition bipartition);

cplx expectation(const QuantumState& state, const SparseOperator& op);
/// <A B>.
cplx expectation_product(const QuantumState& state, const SparseOperator& a, const SparseOperator& b);
/// Variance of a Hermitian operator.
double variance(const QuantumState& state, const SparseOperator& op);
/// <(dA dB + dB dA)>/2 for Hermitian A, B.
double sym_covariance(const QuantumState& state, const SparseOperator& a, const SparseOperator& b);

/// Moments of R^n = (q_k, p_k, q_lm, p_lm) for one bipartition.
struct BipartitionMoments {
    Bipartition bipartition;
    std::array<double, 4> mean{};
    /// Symmetrized raw second moments <R_i R_j + R_j R_i>/2.
    std::array<std::array<double, 4>, 4> sym{};
    /// Im <R_i R_j>, i.e. half the expected commutator.
    std::array<std::array<double, 4>, 4> im{};
    double f_k = 0.0;
    double f_lm = 0.0;

    double covariance(std::size_t i, std::size_t j) const { return sym[i][j] - mean[i] * mean[j]; }
};

struct OrderMoments {
    std::size_t n = 1;
    /// <a_k+^n a_k^n> for k = 1, 2, 3.
    std::array<double, 3> falling{};
    std::array<BipartitionMoments, 3> parts{};

    const BipartitionMoments& part(std::size_t k) const { return parts.at(k); }
};

/// Every moment the criteria need, detached from the state.
struct MomentTable {
    std::vector<std::size_t> dims;
    /// <N_k> for every mode of the layout.
    std::vector<double> mean_photons;
    std::vector<OrderMoments> orders;
    /// Largest imaginary part dropped while filling the table.
    double max_dropped_imag = 0.0;

    const OrderMoments& order(std::size_t n) const;
    bool has_order(std::size_t n) const;
};

class MissingMomentError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Operator bank reused across many states of one layout.
class MomentEngine {
public:
    MomentEngine(const ModeLayout& layout, std::vector<std::size_t> orders);

    MomentTable compute(const QuantumState& state) const;
    const QuadratureSet& set(std::size_t n, std::size_t k) const;
    const ModeLayout& layout() const { return layout_; }

private:
    ModeLayout layout_;
    std::vector<std::size_t> orders_;
    std::vector<std::array<QuadratureSet, 3>> sets_;
    std::vector<std::array<SparseOperator, 3>> falling_ops_;
    std::vector<SparseOperator> number_ops_;
};

MomentTable moment_table(const QuantumState& state, std::size_t n);
MomentTable moment_table(const QuantumState& state, const std::vector<std::size_t>& orders);

nlohmann::json to_json(const MomentTable& table);
MomentTable moment_table_from_json(const nlohmann::json& j);

/// Names of the R^n components as used in serialized tables.
inline constexpr std::array<const char*, 4> kQuadratureNames{"q_k", "p_k", "q_lm", "p_lm"};

}  // namespace tps
