#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tps/moments.hpp"

namespace tps {

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

/// 4x4 covariance matrix of R^n = (q_k, p_k, q_lm, p_lm) with its commutator scales.
struct CovarianceMatrixN {
    std::size_t n = 1;
    Bipartition bipartition;
    Mat4 V = Mat4::Zero();
    double f_k = 0.0;
    double f_lm = 0.0;
    /// max |V_ij + (i/2)<Omega_ij> - (<R_i R_j> - <R_i><R_j>)| when built from a table.
    double commutator_identity_residual = 0.0;

    Mat2 A() const { return V.topLeftCorner<2, 2>(); }
    Mat2 B() const { return V.bottomRightCorner<2, 2>(); }
    Mat2 C() const { return V.topRightCorner<2, 2>(); }
};

CovarianceMatrixN covariance_matrix(const MomentTable& table, std::size_t n, std::size_t k);

/// Smallest eigenvalue of V + (i/2)<Omega> with Omega = diag(adiag(f_k,-f_k), adiag(f_lm,-f_lm)).
double uncertainty_min_eigenvalue(const Mat4& V, double f_k, double f_lm);

/// Parameters (n1, n2, m1, m2, s1, s2) of the sparse canonical covariance
///
///     | n1  0  s1  0 |
///     |  0 n2   0 s2 |
///     | s1  0  m1  0 |
///     |  0 s2   0 m2 |
///
/// with bn_i = 2 n_i - f_k and bm_i = 2 m_i - f_lm tied by
/// bn2/bn1 = bm2/bm1 and 2(|s1| - |s2|) = sqrt(bn1 bm1) - sqrt(bn2 bm2).
///
/// Canonical choice among equivalent forms: s1 >= 0 and bn1 >= bn2.
struct StandardForm {
    double n1 = 0, n2 = 0, m1 = 0, m2 = 0, s1 = 0, s2 = 0;
    double f_k = 0, f_lm = 0;
    /// Local transforms with S V S^T = standard form, S = diag(S_k, S_lm).
    Mat2 S_k = Mat2::Identity();
    Mat2 S_lm = Mat2::Identity();
    /// |S J S^T - J|_max for J = adiag(f, -f) of each block.
    double symplectic_residual_k = 0.0;
    double symplectic_residual_lm = 0.0;
    /// Largest entry of S V S^T outside the canonical pattern.
    double pattern_residual = 0.0;
    /// Squeeze parameters x = r_k^2, y = r_lm^2 chosen by the root search.
    double squeeze_k = 1.0;
    double squeeze_lm = 1.0;

    double bn(int i) const { return 2.0 * (i == 1 ? n1 : n2) - f_k; }
    double bm(int i) const { return 2.0 * (i == 1 ? m1 : m2) - f_lm; }
    double ratio_residual() const;
    double sum_residual() const;
    Mat4 matrix() const;

    static StandardForm from_parameters(double n1, double n2, double m1, double m2, double s1, double s2,
                                        double f_k, double f_lm);
};

class StandardFormError : public std::runtime_error {
public:
    StandardFormError(const std::string& what, double lo = 0.0, double hi = 0.0, double residual = 0.0)
        : std::runtime_error(what), lo_(lo), hi_(hi), residual_(residual) {}
    double bracket_lo() const { return lo_; }
    double bracket_hi() const { return hi_; }
    double residual() const { return residual_; }

private:
    double lo_, hi_, residual_;
};

/// Local Williamson + SVD + constrained squeeze reduction.
StandardForm reduce_to_standard_form(const CovarianceMatrixN& cov, double physicality_tol = 1e-8);

enum class Separability { Separable, Entangled };
const char* to_string(Separability s);

struct Theorem2Decision {
    Separability decision = Separability::Separable;
    /// |margin| below the tie tolerance; counted as separable.
    bool boundary = false;
    /// min_i (sqrt(bn_i bm_i) - 2|s_i|)
    double margin = 0.0;
    /// Witness with gain g^2 = sqrt(bm1/bn1) and sign-dressed combinations; equals 2 margin on
    /// constrained forms. When bn1 or bm1 vanishes the gain is 0 or infinite and the limit is reported.
    double witness = 0.0;
    double gain_sq = 1.0;
    int sign_q = 1;
    int sign_p = 1;
};

inline constexpr double kSeparabilityTieTol = 1e-9;

Theorem2Decision theorem2_decide(const StandardForm& sf);

/// Unit-commutator analog V_G of a standard form.
Mat4 gaussian_analog(const StandardForm& sf);

struct PptResult {
    Separability decision = Separability::Separable;
    double min_eigenvalue = 0.0;
};

/// Two-mode Gaussian PPT test: flip p of the second block, then check the
/// unit-commutator uncertainty relation.
PptResult simon_ppt_oracle(const Mat4& vg, double tol = kSeparabilityTieTol);

nlohmann::json to_json(const StandardForm& sf);

}  // namespace tps
