#include "tps/moments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>
#include <string>

namespace tps {

Bipartition Bipartition::isolating(std::size_t k) {
    switch (k) {
        case 0: return {0, 1, 2};
        case 1: return {1, 0, 2};
        case 2: return {2, 0, 1};
        default: throw std::out_of_range("bipartition index must be 0, 1 or 2");
    }
}

namespace {

using cplx_ld = std::complex<long double>;
using SpMatLd = Eigen::SparseMatrix<cplx_ld, Eigen::RowMajor>;

SpMatLd power_ld(std::size_t d, std::size_t n) {
    SpMatLd a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    std::vector<Eigen::Triplet<cplx_ld>> trip;
    for (std::size_t m = n; m < d; ++m) {
        long double falling = 1.0L;
        for (std::size_t j = 0; j < n; ++j) falling *= static_cast<long double>(m - j);
        trip.emplace_back(static_cast<Eigen::Index>(m - n), static_cast<Eigen::Index>(m), std::sqrt(falling));
    }
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

SpMatLd kron_ld(const SpMatLd& a, const SpMatLd& b) {
    SpMatLd out(a.rows() * b.rows(), a.cols() * b.cols());
    std::vector<Eigen::Triplet<cplx_ld>> trip;
    trip.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
    for (Eigen::Index r = 0; r < a.outerSize(); ++r)
        for (SpMatLd::InnerIterator x(a, r); x; ++x)
            for (Eigen::Index s = 0; s < b.outerSize(); ++s)
                for (SpMatLd::InnerIterator y(b, s); y; ++y)
                    trip.emplace_back(x.row() * b.rows() + y.row(), x.col() * b.cols() + y.col(), x.value() * y.value());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

/// n-th power lowering operator acting on `modes`, in extended precision.
SpMatLd lowering_ld(const ModeLayout& layout, const std::vector<std::size_t>& modes, std::size_t n) {
    SpMatLd acc;
    for (std::size_t k = 0; k < layout.mode_count(); ++k) {
        const bool acts = std::find(modes.begin(), modes.end(), k) != modes.end();
        SpMatLd factor = power_ld(layout.dim(k), acts ? n : 0);
        acc = k == 0 ? factor : kron_ld(acc, factor);
    }
    return acc;
}

QuadraturePair quadratures_from_lowering(const ModeLayout& layout, const std::vector<std::size_t>& modes,
                                         std::size_t n) {
    // q, p and f = -i[q, p] are formed in extended precision and rounded once
    const cplx_ld i(0.0L, 1.0L);
    const SpMatLd lower = lowering_ld(layout, modes, n);
    const SpMatLd raise = lower.adjoint();
    const SpMatLd q = cplx_ld(0.5L) * (raise + lower);
    const SpMatLd p = (cplx_ld(0.5L) * i) * (raise - lower);
    const SpMatLd qp = q * p, pq = p * q;
    const SpMatLd f = (-i) * (qp - pq);
    auto round = [&](const SpMatLd& m) {
        SpMat out = m.unaryExpr([](const cplx_ld& z) { return cplx(static_cast<double>(z.real()), static_cast<double>(z.imag())); });
        out.prune(cplx(0.0));
        return SparseOperator(layout, std::move(out));
    };
    return {round(q), round(p), round(f)};
}

void require_cutoff(const ModeLayout& layout, std::size_t mode, std::size_t n) {
    if (mode >= layout.mode_count()) throw LayoutError("mode index out of range");
    if (layout.cutoff(mode) <= n)
        throw CutoffError("cutoff too small for order " + std::to_string(n) + " on mode " +
                          std::to_string(mode + 1));
}

// sum_ab A(a,b) X(b,a) = tr(A X)
cplx trace_product(const SpMat& a, const DensityMatrix& x) {
    cplx acc = 0.0;
    for (Eigen::Index r = 0; r < a.outerSize(); ++r)
        for (SpMat::InnerIterator it(a, r); it; ++it) acc += it.value() * x(it.col(), it.row());
    return acc;
}

}  // namespace

QuadraturePair single_mode_quadratures(const ModeLayout& layout, std::size_t mode, std::size_t n) {
    if (n == 0) throw std::invalid_argument("hierarchy index must be >= 1");
    require_cutoff(layout, mode, n);
    return quadratures_from_lowering(layout, {mode}, n);
}

QuadraturePair pair_quadratures(const ModeLayout& layout, std::size_t l, std::size_t m, std::size_t n) {
    if (n == 0) throw std::invalid_argument("hierarchy index must be >= 1");
    if (l == m) throw std::invalid_argument("pair quadratures need two distinct modes");
    require_cutoff(layout, l, n);
    require_cutoff(layout, m, n);
    return quadratures_from_lowering(layout, {l, m}, n);
}

std::vector<std::size_t> interior_indices(const ModeLayout& layout, const std::vector<std::size_t>& modes,
                                          std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layout.total_dim(); ++i) {
        bool inside = true;
        for (auto m : modes) {
            if (layout.cutoff(m) < n || layout.occupation(i, m) > layout.cutoff(m) - n) {
                inside = false;
                break;
            }
        }
        if (inside) out.push_back(i);
    }
    return out;
}

QuadratureSet build_quadrature_set(const ModeLayout& layout, std::size_t n, Bipartition bp) {
    if (layout.mode_count() < 3) throw LayoutError("quadrature sets need at least three modes");
    if (bp.k > 2 || bp.l > 2 || bp.m > 2 || bp.l >= bp.m || bp.k == bp.l || bp.k == bp.m)
        throw std::invalid_argument("bipartition must split modes {1,2,3} as k | l<m");
    auto single = single_mode_quadratures(layout, bp.k, n);
    auto pair = pair_quadratures(layout, bp.l, bp.m, n);
    return {n,
            bp,
            std::move(single.q),
            std::move(single.p),
            std::move(pair.q),
            std::move(pair.p),
            std::move(single.f),
            std::move(pair.f)};
}

cplx expectation(const QuantumState& state, const SparseOperator& op) {
    if (!(state.layout() == op.layout())) throw LayoutError("state and operator dimensions differ");
    if (state.is_pure()) return state.ket().dot(op.matrix() * state.ket());
    return trace_product(op.matrix(), state.density());
}

cplx expectation_product(const QuantumState& state, const SparseOperator& a, const SparseOperator& b) {
    if (!(state.layout() == a.layout()) || !(state.layout() == b.layout()))
        throw LayoutError("state and operator dimensions differ");
    if (state.is_pure()) {
        const Ket ad = a.matrix().adjoint() * state.ket();
        return ad.dot(b.matrix() * state.ket());
    }
    const DensityMatrix x = b.matrix() * state.density();
    return trace_product(a.matrix(), x);
}

double variance(const QuantumState& state, const SparseOperator& op) {
    return sym_covariance(state, op, op);
}

double sym_covariance(const QuantumState& state, const SparseOperator& a, const SparseOperator& b) {
    // <BA> = conj<AB> for Hermitian A, B, so the anticommutator mean is Re<AB>
    const double ab = expectation_product(state, a, b).real();
    return ab - expectation(state, a).real() * expectation(state, b).real();
}

const OrderMoments& MomentTable::order(std::size_t n) const {
    for (const auto& o : orders)
        if (o.n == n) return o;
    throw MissingMomentError("moment table has no entries for order " + std::to_string(n));
}

bool MomentTable::has_order(std::size_t n) const {
    return std::any_of(orders.begin(), orders.end(), [n](const OrderMoments& o) { return o.n == n; });
}

MomentEngine::MomentEngine(const ModeLayout& layout, std::vector<std::size_t> orders)
    : layout_(layout), orders_(std::move(orders)) {
    if (layout_.mode_count() < 3) throw LayoutError("moment tables need at least three modes");
    for (std::size_t n : orders_) {
        sets_.push_back({build_quadrature_set(layout_, n, Bipartition::isolating(0)),
                         build_quadrature_set(layout_, n, Bipartition::isolating(1)),
                         build_quadrature_set(layout_, n, Bipartition::isolating(2))});
        std::array<SparseOperator, 3> falling;
        for (std::size_t k = 0; k < 3; ++k) {
            const SparseOperator lower = annihilation_power(layout_, ModeIndex{k}, n);
            falling[k] = lower.adjoint() * lower;
        }
        falling_ops_.push_back(std::move(falling));
    }
    for (std::size_t k = 0; k < layout_.mode_count(); ++k) number_ops_.push_back(number(layout_, ModeIndex{k}));
}

const QuadratureSet& MomentEngine::set(std::size_t n, std::size_t k) const {
    for (std::size_t i = 0; i < orders_.size(); ++i)
        if (orders_[i] == n) return sets_[i].at(k);
    throw MissingMomentError("engine was not built for order " + std::to_string(n));
}

MomentTable MomentEngine::compute(const QuantumState& state) const {
    if (!(state.layout() == layout_)) throw LayoutError("state layout differs from engine layout");
    MomentTable table;
    table.dims = layout_.dims();
    double dropped = 0.0;
    auto real_of = [&dropped](cplx z) {
        dropped = std::max(dropped, std::abs(z.imag()));
        return z.real();
    };

    for (const auto& N : number_ops_) table.mean_photons.push_back(real_of(expectation(state, N)));

    for (std::size_t oi = 0; oi < orders_.size(); ++oi) {
        OrderMoments om;
        om.n = orders_[oi];
        for (std::size_t k = 0; k < 3; ++k) om.falling[k] = real_of(expectation(state, falling_ops_[oi][k]));
        for (std::size_t k = 0; k < 3; ++k) {
            const QuadratureSet& qs = sets_[oi][k];
            const auto r = qs.r();
            BipartitionMoments bm;
            bm.bipartition = qs.bipartition;
            bm.f_k = real_of(expectation(state, qs.f_k));
            bm.f_lm = real_of(expectation(state, qs.f_lm));
            if (state.is_pure()) {
                const Ket& psi = state.ket();
                std::array<Ket, 4> rv;
                for (std::size_t i = 0; i < 4; ++i) rv[i] = r[i]->matrix() * psi;
                for (std::size_t i = 0; i < 4; ++i) {
                    bm.mean[i] = real_of(psi.dot(rv[i]));
                    for (std::size_t j = 0; j < 4; ++j) {
                        const cplx z = rv[i].dot(rv[j]);
                        bm.sym[i][j] = z.real();
                        bm.im[i][j] = z.imag();
                    }
                }
            } else {
                const DensityMatrix& rho = state.density();
                for (std::size_t i = 0; i < 4; ++i) {
                    bm.mean[i] = real_of(trace_product(r[i]->matrix(), rho));
                    for (std::size_t j = 0; j < 4; ++j) {
                        const SpMat prod = r[i]->matrix() * r[j]->matrix();
                        const cplx z = trace_product(prod, rho);
                        bm.im[i][j] = z.imag();
                        bm.sym[i][j] = z.real();
                    }
                }
                // trace of a product of Hermitian matrices: symmetrize the real part exactly
                for (std::size_t i = 0; i < 4; ++i)
                    for (std::size_t j = i + 1; j < 4; ++j) {
                        const double s = 0.5 * (bm.sym[i][j] + bm.sym[j][i]);
                        bm.sym[i][j] = bm.sym[j][i] = s;
                    }
            }
            om.parts[k] = bm;
        }
        table.orders.push_back(om);
    }
    table.max_dropped_imag = dropped;
    return table;
}

MomentTable moment_table(const QuantumState& state, std::size_t n) {
    return moment_table(state, std::vector<std::size_t>{n});
}

MomentTable moment_table(const QuantumState& state, const std::vector<std::size_t>& orders) {
    return MomentEngine(state.layout(), orders).compute(state);
}

nlohmann::json to_json(const MomentTable& table) {
    using nlohmann::json;
    json j;
    j["dims"] = table.dims;
    j["mean_photons"] = table.mean_photons;
    j["orders"] = json::array();
    for (const auto& om : table.orders) {
        json jo;
        jo["n"] = om.n;
        jo["falling"] = om.falling;
        jo["bipartitions"] = json::array();
        for (const auto& bm : om.parts) {
            json jb;
            jb["k"] = bm.bipartition.k + 1;
            jb["lm"] = {bm.bipartition.l + 1, bm.bipartition.m + 1};
            for (std::size_t i = 0; i < 4; ++i) {
                jb["mean"][kQuadratureNames[i]] = bm.mean[i];
                for (std::size_t q = i; q < 4; ++q) {
                    const std::string key = std::string(kQuadratureNames[i]) + "*" + kQuadratureNames[q];
                    jb["second"][key] = bm.sym[i][q];
                    if (q != i) jb["im_second"][key] = bm.im[i][q];
                }
            }
            jb["f_k"] = bm.f_k;
            jb["f_lm"] = bm.f_lm;
            jo["bipartitions"].push_back(std::move(jb));
        }
        j["orders"].push_back(std::move(jo));
    }
    return j;
}

MomentTable moment_table_from_json(const nlohmann::json& j) {
    MomentTable table;
    try {
        table.dims = j.at("dims").get<std::vector<std::size_t>>();
        table.mean_photons = j.at("mean_photons").get<std::vector<double>>();
        for (const auto& jo : j.at("orders")) {
            OrderMoments om;
            om.n = jo.at("n").get<std::size_t>();
            om.falling = jo.at("falling").get<std::array<double, 3>>();
            const auto& parts = jo.at("bipartitions");
            if (parts.size() != 3) throw MissingMomentError("each order needs three bipartitions");
            for (const auto& jb : parts) {
                const auto k = jb.at("k").get<std::size_t>();
                if (k < 1 || k > 3) throw MissingMomentError("bipartition k must be 1, 2 or 3");
                BipartitionMoments bm;
                bm.bipartition = Bipartition::isolating(k - 1);
                for (std::size_t i = 0; i < 4; ++i) {
                    bm.mean[i] = jb.at("mean").at(kQuadratureNames[i]).get<double>();
                    for (std::size_t q = i; q < 4; ++q) {
                        const std::string key = std::string(kQuadratureNames[i]) + "*" + kQuadratureNames[q];
                        bm.sym[i][q] = bm.sym[q][i] = jb.at("second").at(key).get<double>();
                        if (q != i) {
                            const double v = jb.contains("im_second") ? jb["im_second"].value(key, 0.0) : 0.0;
                            bm.im[i][q] = v;
                            bm.im[q][i] = -v;
                        }
                    }
                }
                bm.f_k = jb.at("f_k").get<double>();
                bm.f_lm = jb.at("f_lm").get<double>();
                om.parts[k - 1] = bm;
            }
            table.orders.push_back(om);
        }
    } catch (const nlohmann::json::exception& e) {
        throw MissingMomentError(std::string("malformed moment table: ") + e.what());
    }
    return table;
}

}  // namespace tps
