#include "tps/stdform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tps {

namespace {

Mat2 rot(double angle) {
    Mat2 r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

Mat2 squeeze(double x) {
    Mat2 s = Mat2::Zero();
    s(0, 0) = std::sqrt(x);
    s(1, 1) = 1.0 / std::sqrt(x);
    return s;
}

Mat2 adiag(double f) {
    Mat2 j;
    j << 0.0, f, -f, 0.0;
    return j;
}

// SL(2) map W with W A W^T = sqrt(det A) I for positive definite A.
Mat2 isotropic_map(const Mat2& a) {
    const double angle = 0.5 * std::atan2(2.0 * a(0, 1), a(0, 0) - a(1, 1));
    const Mat2 r = rot(angle);
    const Mat2 d = r.transpose() * a * r;
    const double t = std::pow(d(1, 1) / d(0, 0), 0.25);
    Mat2 s = Mat2::Zero();
    s(0, 0) = t;
    s(1, 1) = 1.0 / t;
    return s * r.transpose();
}

// C = rot(left) diag(sx, sy) rot(right) with sx >= |sy|, sign(sy) = sign(det C).
struct Svd2 {
    double left, right, sx, sy;
};

Svd2 svd2(const Mat2& c) {
    const double e = 0.5 * (c(0, 0) + c(1, 1));
    const double f = 0.5 * (c(0, 0) - c(1, 1));
    const double g = 0.5 * (c(1, 0) + c(0, 1));
    const double h = 0.5 * (c(1, 0) - c(0, 1));
    const double q = std::hypot(e, h);
    const double r = std::hypot(f, g);
    const double a1 = std::atan2(g, f);
    const double a2 = std::atan2(h, e);
    return {0.5 * (a2 + a1), 0.5 * (a2 - a1), q + r, q - r};
}

Mat4 block_diag(const Mat2& a, const Mat2& b) {
    Mat4 s = Mat4::Zero();
    s.topLeftCorner<2, 2>() = a;
    s.bottomRightCorner<2, 2>() = b;
    return s;
}

}  // namespace

CovarianceMatrixN covariance_matrix(const MomentTable& table, std::size_t n, std::size_t k) {
    const BipartitionMoments& bm = table.order(n).part(k);
    CovarianceMatrixN cov;
    cov.n = n;
    cov.bipartition = bm.bipartition;
    cov.f_k = bm.f_k;
    cov.f_lm = bm.f_lm;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            cov.V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bm.covariance(i, j);

    // V + (i/2)<Omega> must equal <dR_i dR_j>; the real parts agree by
    // construction, the imaginary parts carry the commutators.
    Mat4 omega_half = Mat4::Zero();
    omega_half.topLeftCorner<2, 2>() = 0.5 * adiag(bm.f_k);
    omega_half.bottomRightCorner<2, 2>() = 0.5 * adiag(bm.f_lm);
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            worst = std::max(worst, std::abs(omega_half(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                             bm.im[i][j]));
    cov.commutator_identity_residual = worst;
    return cov;
}

double uncertainty_min_eigenvalue(const Mat4& V, double f_k, double f_lm) {
    Eigen::Matrix4cd m = V.cast<cplx>();
    const cplx i(0.0, 1.0);
    m(0, 1) += 0.5 * i * f_k;
    m(1, 0) -= 0.5 * i * f_k;
    m(2, 3) += 0.5 * i * f_lm;
    m(3, 2) -= 0.5 * i * f_lm;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double StandardForm::ratio_residual() const {
    const double a1 = bn(1), b1 = bm(1);
    if (a1 > 1e-12 && b1 > 1e-12) return std::abs(bn(2) / a1 - bm(2) / b1);
    return std::abs(bn(2) * b1 - bm(2) * a1);
}

double StandardForm::sum_residual() const {
    auto root = [](double v) { return std::sqrt(std::max(v, 0.0)); };
    return std::abs(2.0 * (std::abs(s1) - std::abs(s2)) - (root(bn(1) * bm(1)) - root(bn(2) * bm(2))));
}

Mat4 StandardForm::matrix() const {
    Mat4 v = Mat4::Zero();
    v(0, 0) = n1;
    v(1, 1) = n2;
    v(2, 2) = m1;
    v(3, 3) = m2;
    v(0, 2) = v(2, 0) = s1;
    v(1, 3) = v(3, 1) = s2;
    return v;
}

StandardForm StandardForm::from_parameters(double n1, double n2, double m1, double m2, double s1, double s2,
                                           double f_k, double f_lm) {
    StandardForm sf;
    sf.n1 = n1;
    sf.n2 = n2;
    sf.m1 = m1;
    sf.m2 = m2;
    sf.s1 = s1;
    sf.s2 = s2;
    sf.f_k = f_k;
    sf.f_lm = f_lm;
    return sf;
}

StandardForm reduce_to_standard_form(const CovarianceMatrixN& cov, double physicality_tol) {
    const double f_k = cov.f_k, f_lm = cov.f_lm;
    if (!(f_k > 0.0) || !(f_lm > 0.0)) throw StandardFormError("commutator expectations must be positive");
    const Mat4 V = 0.5 * (cov.V + cov.V.transpose());
    const double scale = std::max(1.0, V.cwiseAbs().maxCoeff());
    const double lam = uncertainty_min_eigenvalue(V, f_k, f_lm);
    if (lam < -physicality_tol * scale)
        throw StandardFormError("covariance matrix violates the uncertainty relation", 0.0, 0.0, lam);

    // (i) each block to sqrt(det) * identity
    const Mat2 w_k = isotropic_map(cov.A());
    const Mat2 w_lm = isotropic_map(cov.B());
    const double a = std::sqrt(std::max(cov.A().determinant(), 0.0));
    const double b = std::sqrt(std::max(cov.B().determinant(), 0.0));
    const Mat2 c1m = w_k * V.topRightCorner<2, 2>() * w_lm.transpose();

    // (ii) rotations diagonalizing the correlation block
    const Svd2 svd = svd2(c1m);
    const Mat2 u_k = rot(svd.left).transpose();
    const Mat2 u_lm = rot(svd.right);
    const double c1 = svd.sx;
    const double c2 = svd.sy;

    // (iii) squeeze pair enforcing both constraints
    const double alpha = 2.0 * a / f_k;
    const double beta = 2.0 * b / f_lm;
    auto root = [](double v) { return std::sqrt(std::max(v, 0.0)); };
    auto y_of = [&](double x) {
        const double rho = std::max(alpha / x - 1.0, 0.0) / (alpha * x - 1.0);
        return 2.0 * beta / ((1.0 - rho) + std::sqrt((1.0 - rho) * (1.0 - rho) + 4.0 * rho * beta * beta));
    };
    auto residual = [&](double x) {
        const double y = y_of(x);
        const double bn1 = f_k * (alpha * x - 1.0), bn2 = f_k * (alpha / x - 1.0);
        const double bm1 = f_lm * (beta * y - 1.0), bm2 = f_lm * (beta / y - 1.0);
        const double xy = std::sqrt(x * y);
        return 2.0 * (c1 * xy - std::abs(c2) / xy) - (root(bn1 * bm1) - root(bn2 * bm2));
    };

    double x = 1.0, y = 1.0;
    const double gtol = 1e-13 * scale;
    const bool degenerate = alpha <= 1.0 + 1e-12 || beta <= 1.0 + 1e-12;
    if (!degenerate && residual(1.0) > gtol) {
        const double x_max = std::min(alpha, 1e6);  // r in [1, 1e3]
        double lo = 0.0, hi = std::log(x_max);
        const double g_hi = residual(x_max);
        if (g_hi > gtol)
            throw StandardFormError("no squeeze in bracket satisfies the standard-form constraints", 1.0, x_max,
                                    g_hi);
        for (int it = 0; it < 300 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            const double g = residual(std::exp(mid));
            if (std::abs(g) <= 1e-15 * scale) {
                lo = hi = mid;
                break;
            }
            (g > 0.0 ? lo : hi) = mid;
        }
        x = std::exp(0.5 * (lo + hi));
        y = y_of(x);
    }

    StandardForm sf;
    sf.f_k = f_k;
    sf.f_lm = f_lm;
    sf.squeeze_k = x;
    sf.squeeze_lm = y;
    sf.S_k = squeeze(x) * u_k * w_k;
    sf.S_lm = squeeze(y) * u_lm * w_lm;
    (void)c2;

    Mat4 out = block_diag(sf.S_k, sf.S_lm) * V * block_diag(sf.S_k, sf.S_lm).transpose();
    if (out(0, 2) < 0.0) {
        // rotation by pi on the k block flips both correlations
        sf.S_k = -sf.S_k;
        out = block_diag(sf.S_k, sf.S_lm) * V * block_diag(sf.S_k, sf.S_lm).transpose();
    }
    // the composite of an already-canonical input is +-identity; prefer +identity
    if (sf.S_k.trace() < 0.0 && sf.S_lm.trace() < 0.0) {
        sf.S_k = -sf.S_k;
        sf.S_lm = -sf.S_lm;
    }
    sf.n1 = out(0, 0);
    sf.n2 = out(1, 1);
    sf.m1 = out(2, 2);
    sf.m2 = out(3, 3);
    sf.s1 = out(0, 2);
    sf.s2 = out(1, 3);
    double pattern = 0.0;
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) {
            const bool allowed = i == j || (i % 2 == j % 2);
            if (!allowed) pattern = std::max(pattern, std::abs(out(i, j)));
        }
    sf.pattern_residual = pattern;
    sf.symplectic_residual_k = (sf.S_k * adiag(f_k) * sf.S_k.transpose() - adiag(f_k)).cwiseAbs().maxCoeff();
    sf.symplectic_residual_lm =
        (sf.S_lm * adiag(f_lm) * sf.S_lm.transpose() - adiag(f_lm)).cwiseAbs().maxCoeff();
    return sf;
}

const char* to_string(Separability s) {
    switch (s) {
        case Separability::Separable: return "separable";
        case Separability::Entangled: return "entangled";
    }
    return "?";
}

Theorem2Decision theorem2_decide(const StandardForm& sf) {
    Theorem2Decision d;
    auto root = [](double v) { return std::sqrt(std::max(v, 0.0)); };
    const double bn1 = sf.bn(1), bn2 = sf.bn(2), bm1 = sf.bm(1), bm2 = sf.bm(2);
    if (bn1 < -1e-9 || bn2 < -1e-9 || bm1 < -1e-9 || bm2 < -1e-9)
        throw StandardFormError("standard form has negative reduced variances");
    d.margin = std::min(root(bn1 * bm1) - 2.0 * std::abs(sf.s1), root(bn2 * bm2) - 2.0 * std::abs(sf.s2));
    d.sign_q = sf.s1 < 0.0 ? -1 : 1;
    d.sign_p = sf.s2 < 0.0 ? -1 : 1;

    // u = g q_k - sign(s1) q_lm / g,  v = g p_k - sign(s2) p_lm / g, written with the reduced variances
    const double a = 0.5 * (std::max(bn1, 0.0) + std::max(bn2, 0.0));
    const double b = 0.5 * (std::max(bm1, 0.0) + std::max(bm2, 0.0));
    const double cross = 2.0 * (std::abs(sf.s1) + std::abs(sf.s2));
    if (bn1 > 0.0 && bm1 > 0.0) {
        d.gain_sq = std::sqrt(bm1 / bn1);
        d.witness = d.gain_sq * a + b / d.gain_sq - cross;
    } else {
        // the gain runs to 0 or infinity; report the limiting value
        d.gain_sq = bn1 > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        d.witness = 2.0 * std::sqrt(a * b) - cross;
    }

    if (std::abs(d.margin) < kSeparabilityTieTol) {
        d.boundary = true;
        d.decision = Separability::Separable;
    } else {
        d.decision = d.margin < 0.0 ? Separability::Entangled : Separability::Separable;
    }
    return d;
}

Mat4 gaussian_analog(const StandardForm& sf) {
    if (!(sf.f_k > 0.0) || !(sf.f_lm > 0.0)) throw StandardFormError("commutator expectations must be positive");
    Mat4 v = Mat4::Zero();
    const double cross = 1.0 / std::sqrt(sf.f_k * sf.f_lm);
    v(0, 0) = sf.n1 / sf.f_k;
    v(1, 1) = sf.n2 / sf.f_k;
    v(2, 2) = sf.m1 / sf.f_lm;
    v(3, 3) = sf.m2 / sf.f_lm;
    v(0, 2) = v(2, 0) = sf.s1 * cross;
    v(1, 3) = v(3, 1) = sf.s2 * cross;
    return v;
}

PptResult simon_ppt_oracle(const Mat4& vg, double tol) {
    const double scale = std::max(1.0, vg.cwiseAbs().maxCoeff());
    const double physical = uncertainty_min_eigenvalue(vg, 1.0, 1.0);
    if (physical < -tol * scale)
        throw StandardFormError("unit-commutator covariance is unphysical", 0.0, 0.0, physical);
    Mat4 flip = Mat4::Identity();
    flip(3, 3) = -1.0;
    const Mat4 transposed = flip * vg * flip;
    PptResult r;
    r.min_eigenvalue = uncertainty_min_eigenvalue(transposed, 1.0, 1.0);
    r.decision = r.min_eigenvalue >= -tol * scale ? Separability::Separable : Separability::Entangled;
    return r;
}

nlohmann::json to_json(const StandardForm& sf) {
    return {{"n1", sf.n1},
            {"n2", sf.n2},
            {"m1", sf.m1},
            {"m2", sf.m2},
            {"s1", sf.s1},
            {"s2", sf.s2},
            {"f_k", sf.f_k},
            {"f_lm", sf.f_lm},
            {"S_k", {sf.S_k(0, 0), sf.S_k(0, 1), sf.S_k(1, 0), sf.S_k(1, 1)}},
            {"S_lm", {sf.S_lm(0, 0), sf.S_lm(0, 1), sf.S_lm(1, 0), sf.S_lm(1, 1)}},
            {"ratio_residual", sf.ratio_residual()},
            {"sum_residual", sf.sum_residual()}};
}

}  // namespace tps
