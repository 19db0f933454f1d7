#include "tps/criteria.hpp"

#include <cmath>
#include <string>

#include "tps/stdform.hpp"

namespace tps {

GainVector GainVector::uniform(double g) {
    GainVector v{{g, g, g}};
    v.validate();
    return v;
}

double GainVector::at(std::size_t k) const {
    if (k >= 3) throw std::out_of_range("bipartition index must be 0, 1 or 2");
    return g[k];
}

void GainVector::validate() const {
    for (double x : g)
        if (x == 0.0 || !std::isfinite(x)) throw std::invalid_argument("gain must be finite and nonzero");
}

nlohmann::json to_json(const WitnessResult& w) {
    nlohmann::json j{{"kind", w.kind == WitnessKind::Genuine ? "W" : "F"},
                     {"n", w.n},
                     {"k", w.k + 1},
                     {"value", w.value},
                     {"gains", w.gains.g}};
    if (w.xi) j["xi"] = *w.xi;
    return j;
}

WitnessResult witness_F(const MomentTable& table, std::size_t n, std::size_t k, double g, CrossSigns signs) {
    if (g == 0.0 || !std::isfinite(g)) throw std::invalid_argument("gain must be finite and nonzero");
    const BipartitionMoments& bm = table.order(n).part(k);
    const double g2 = g * g;
    const double value = g2 * (bm.covariance(0, 0) + bm.covariance(1, 1)) +
                         (bm.covariance(2, 2) + bm.covariance(3, 3)) / g2 +
                         2.0 * signs.q * bm.covariance(0, 2) + 2.0 * signs.p * bm.covariance(1, 3) -
                         g2 * bm.f_k - bm.f_lm / g2;
    if (!std::isfinite(value)) throw std::domain_error("witness F is not finite");
    WitnessResult r;
    r.kind = WitnessKind::FullInseparability;
    r.n = n;
    r.k = k;
    r.value = value;
    r.gains.g[k] = g;
    return r;
}

WitnessResult witness_F(const MomentTable& table, std::size_t n, std::size_t k, const GainVector& g) {
    g.validate();
    WitnessResult r = witness_F(table, n, k, g.at(k));
    r.gains = g;
    return r;
}

FullInseparability witness_F_all(const MomentTable& table, std::size_t n, const GainVector& g) {
    FullInseparability out;
    out.certified = true;
    for (std::size_t k = 0; k < 3; ++k) {
        out.F[k] = witness_F(table, n, k, g);
        out.certified = out.certified && out.F[k].value < 0.0;
    }
    return out;
}

WitnessResult witness_W(const MomentTable& table, std::size_t n, const GainVector& g, std::size_t k) {
    const FullInseparability fs = witness_F_all(table, n, g);
    const OrderMoments& om = table.order(n);
    const BipartitionMoments& bm = om.part(k);
    const Bipartition& bp = bm.bipartition;
    double value = fs.F[0].value + fs.F[1].value + fs.F[2].value;
    value += 4.0 * bm.sym[0][2] - 4.0 * bm.sym[1][3];
    value += 2.0 * (om.falling[bp.k] + om.falling[bp.l] * om.falling[bp.m]);
    WitnessResult r;
    r.kind = WitnessKind::Genuine;
    r.n = n;
    r.k = k;
    r.value = value;
    r.gains = g;
    return r;
}

GainOptimum optimize_gain(const MomentTable& table, std::size_t n, std::size_t k) {
    GainOptimum out;
    auto F = [&](double g) { return witness_F(table, n, k, g).value; };

    try {
        const StandardForm sf = reduce_to_standard_form(covariance_matrix(table, n, k));
        const double bn1 = sf.bn(1), bm1 = sf.bm(1);
        if (!(bn1 > 0.0) || !(bm1 > 0.0)) {
            out.degenerate = true;
        } else {
            out.closed_form_g = std::pow(bm1 / bn1, 0.25);
        }
    } catch (const StandardFormError&) {
        out.degenerate = true;
    }
    out.closed_form_F = F(out.closed_form_g);

    // log grid over g in [1e-3, 1e3], then golden-section on the best cell
    constexpr int kGrid = 601;
    const double lo = std::log(1e-3), hi = std::log(1e3);
    const double h = (hi - lo) / (kGrid - 1);
    int best = 0;
    double best_f = F(std::exp(lo));
    for (int i = 1; i < kGrid; ++i) {
        const double f = F(std::exp(lo + i * h));
        if (f < best_f) {
            best_f = f;
            best = i;
        }
    }
    double a = lo + std::max(0, best - 1) * h;
    double b = lo + std::min(kGrid - 1, best + 1) * h;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = F(std::exp(c)), fd = F(std::exp(d));
    for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = F(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = F(std::exp(d));
        }
    }
    const double u = 0.5 * (a + b);
    const double fu = F(std::exp(u));
    if (fu <= best_f) {
        out.numeric_g = std::exp(u);
        out.numeric_F = fu;
    } else {
        out.numeric_g = std::exp(lo + best * h);
        out.numeric_F = best_f;
    }
    return out;
}

UncertaintyCheck uncertainty_check(const MomentTable& table, std::size_t n, std::size_t k) {
    const CovarianceMatrixN cov = covariance_matrix(table, n, k);
    UncertaintyCheck out;
    out.min_eigenvalue = uncertainty_min_eigenvalue(cov.V, cov.f_k, cov.f_lm);
    out.pass = out.min_eigenvalue >= -kUncertaintyTol;
    return out;
}

}  // namespace tps
