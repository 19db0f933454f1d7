#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tps/moments.hpp"

namespace tps {

/// Gains g_{k,n}, one per bipartition; g = 0 is rejected.
struct GainVector {
    std::array<double, 3> g{1.0, 1.0, 1.0};

    static GainVector uniform(double g);
    double at(std::size_t k) const;
    void validate() const;
};

enum class WitnessKind { FullInseparability, Genuine };

struct WitnessResult {
    WitnessKind kind = WitnessKind::FullInseparability;
    std::size_t n = 1;
    /// Zero-based isolated mode; for Genuine, the mode whose occupation enters
    /// the last term alone (0 is the printed form).
    std::size_t k = 0;
    double value = 0.0;
    GainVector gains;
    std::optional<double> xi;

    bool negative(double tol = 1e-9) const { return value < -tol; }
};

nlohmann::json to_json(const WitnessResult& w);

/// Sign dressing of the u and v combinations; Eq.-(2) convention is (-1, +1).
struct CrossSigns {
    int q = -1;
    int p = 1;
};

/// F = Var(g q_k + sq q_lm / g) + Var(g p_k + sp p_lm / g) - g^2 f_k - f_lm / g^2.
WitnessResult witness_F(const MomentTable& table, std::size_t n, std::size_t k, double g,
                        CrossSigns signs = {});
WitnessResult witness_F(const MomentTable& table, std::size_t n, std::size_t k, const GainVector& g);

struct FullInseparability {
    std::array<WitnessResult, 3> F;
    /// All three F < 0.
    bool certified = false;
};

FullInseparability witness_F_all(const MomentTable& table, std::size_t n, const GainVector& g = {});

/// W_n = F1 + F2 + F3 + 4<q_k q_lm> - 4<p_k p_lm> + 2(<N_k> + <N_l><N_m>) with
/// N = a+^n a^n. k = 0 is the printed form; k = 1, 2 are the permuted variants.
WitnessResult witness_W(const MomentTable& table, std::size_t n, const GainVector& g = {}, std::size_t k = 0);

struct GainOptimum {
    /// sqrt(sqrt(bm1/bn1)) from the standard form; 1 when degenerate.
    double closed_form_g = 1.0;
    double closed_form_F = 0.0;
    /// Best g on a log grid followed by golden-section refinement.
    double numeric_g = 1.0;
    double numeric_F = 0.0;
    bool degenerate = false;
    bool numeric_is_lower() const { return numeric_F < closed_form_F; }
};

GainOptimum optimize_gain(const MomentTable& table, std::size_t n, std::size_t k);

struct UncertaintyCheck {
    double min_eigenvalue = 0.0;
    bool pass = true;
};

inline constexpr double kUncertaintyTol = 1e-8;

UncertaintyCheck uncertainty_check(const MomentTable& table, std::size_t n, std::size_t k);

}  // namespace tps
