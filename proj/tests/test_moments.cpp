#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "tps/dynamics.hpp"
#include "tps/moments.hpp"

using namespace tps;

namespace {

QuantumState tps_state(std::size_t d, double xi) {
    HamiltonianSpec spec;
    spec.layout = ModeLayout({d, d, d});
    EvolutionConfig cfg;
    cfg.integrator = Integrator::KrylovExponential;
    return evolve(vacuum(spec.layout), spec, cfg, spec.time_for_xi(xi));
}

double interior_error(const SparseOperator& f, const ModeLayout& L, const std::vector<std::size_t>& modes,
                      std::size_t n, const std::function<double(std::size_t)>& diag) {
    const auto idx = interior_indices(L, modes, n);
    const Eigen::MatrixXcd F = f.dense();
    double worst = 0.0;
    for (std::size_t i : idx)
        for (std::size_t j : idx) {
            const double want = i == j ? diag(i) : 0.0;
            worst = std::max(worst, std::abs(F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - want));
        }
    return worst;
}

}  // namespace

TEST_CASE("single-mode f operator matches normal ordering") {
    ModeLayout L({12, 3, 3});
    for (std::size_t n = 1; n <= 4; ++n) {
        const QuadraturePair qp = single_mode_quadratures(L, 0, n);
        const double err = interior_error(qp.f, L, {0}, n, [&](std::size_t i) {
            return oracle::f_single(L.occupation(i, 0), n);
        });
        CHECK(err < 1e-10);
        CHECK(qp.q.hermiticity_error() < 1e-12);
        CHECK(qp.p.hermiticity_error() < 1e-12);
        CHECK(qp.f.hermiticity_error() < 1e-12);
    }
    // n = 1: 1/2; n = 2: 2m + 1
    ModeLayout S({10});
    const auto f1 = single_mode_quadratures(S, 0, 1).f.dense();
    const auto f2 = single_mode_quadratures(S, 0, 2).f.dense();
    for (Eigen::Index m = 0; m + 2 <= 9; ++m) {
        CHECK(std::abs(f1(m, m) - 0.5) < 1e-14);
        CHECK(std::abs(f2(m, m) - static_cast<double>(2 * m + 1)) < 1e-12);
    }
    CHECK(interior_indices(S, {0}, 2).size() == 8);
}

TEST_CASE("pair f operator matches normal ordering") {
    ModeLayout L({3, 8, 8});
    for (std::size_t n = 1; n <= 3; ++n) {
        const QuadraturePair qp = pair_quadratures(L, 1, 2, n);
        const double err = interior_error(qp.f, L, {1, 2}, n, [&](std::size_t i) {
            return oracle::f_pair(L.occupation(i, 1), L.occupation(i, 2), n);
        });
        CHECK(err < 1e-10);
        CHECK(qp.f.hermiticity_error() < 1e-12);
    }
    const auto f1 = pair_quadratures(L, 1, 2, 1).f.dense();
    const std::size_t occ[] = {0, 2, 5};
    const auto i = static_cast<Eigen::Index>(L.index_of(occ));
    CHECK(std::abs(f1(i, i) - 4.0) < 1e-14);  // (2 + 5 + 1)/2
}

TEST_CASE("quadrature set construction") {
    ModeLayout L({6, 6, 6});
    const QuadratureSet s = build_quadrature_set(L, 2, Bipartition::isolating(1));
    CHECK(s.bipartition == Bipartition{1, 0, 2});
    const cplx i(0, 1);
    CHECK((commutator(s.q_k, s.p_k) - i * s.f_k).dense().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((commutator(s.q_lm, s.p_lm) - i * s.f_lm).dense().cwiseAbs().maxCoeff() < 1e-12);
    for (const SparseOperator* op : s.r()) CHECK(op->hermiticity_error() < 1e-12);

    try {
        build_quadrature_set(ModeLayout({4, 4, 4}), 3, Bipartition::isolating(0));
        FAIL("expected CutoffError");
    } catch (const CutoffError& e) {
        CHECK(std::string(e.what()).find("cutoff too small for order 3") != std::string::npos);
    }
    CHECK_THROWS_AS(build_quadrature_set(ModeLayout({6, 6}), 1, Bipartition{}), LayoutError);
    CHECK_THROWS_AS(single_mode_quadratures(L, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(Bipartition::isolating(3), std::out_of_range);
}

TEST_CASE("vacuum expectations") {
    ModeLayout L({8, 8, 8});
    const QuantumState v = vacuum(L);
    for (std::size_t n = 1; n <= 3; ++n) {
        const QuadratureSet s = build_quadrature_set(L, n, Bipartition::isolating(0));
        const double nf = oracle::factorial(n);
        CHECK(std::abs(expectation(v, s.q_k)) < 1e-15);
        CHECK(variance(v, s.q_k) == doctest::Approx(nf / 4).epsilon(1e-14));
        CHECK(variance(v, s.p_k) == doctest::Approx(nf / 4).epsilon(1e-14));
        CHECK(variance(v, s.q_lm) == doctest::Approx(nf * nf / 4).epsilon(1e-14));
        CHECK(sym_covariance(v, s.q_k, s.q_k) == doctest::Approx(variance(v, s.q_k)));
        CHECK(std::abs(sym_covariance(v, s.q_k, s.q_lm)) < 1e-15);
    }
    CHECK_THROWS_AS(expectation(vacuum(ModeLayout({3, 3, 3})), number(L, ModeIndex{0})), LayoutError);
}

TEST_CASE("vacuum moment table") {
    const MomentTable t = moment_table(vacuum(ModeLayout({8, 8, 8})), {1, 2, 3});
    for (const auto& om : t.orders) {
        const double nf = oracle::factorial(om.n);
        for (double f : om.falling) CHECK(f == 0.0);
        for (const auto& bm : om.parts) {
            CHECK(bm.f_k == doctest::Approx(nf / 2));
            CHECK(bm.f_lm == doctest::Approx(nf * nf / 2));
            for (std::size_t i = 0; i < 4; ++i) {
                CHECK(bm.mean[i] == 0.0);
                for (std::size_t j = 0; j < 4; ++j)
                    if (i != j) CHECK(std::abs(bm.covariance(i, j)) < 1e-15);
            }
            CHECK(bm.covariance(0, 0) == doctest::Approx(nf / 4));
            CHECK(bm.covariance(3, 3) == doctest::Approx(nf * nf / 4));
            CHECK(bm.im[0][1] == doctest::Approx(nf / 4));
            CHECK(bm.im[2][3] == doctest::Approx(nf * nf / 4));
        }
    }
    CHECK_THROWS_AS(t.order(4), MissingMomentError);
    CHECK(t.has_order(2));
}

TEST_CASE("coskewness decomposition holds as operator identities") {
    ModeLayout L({5, 6, 4});
    for (std::size_t k = 0; k < 3; ++k) {
        const Bipartition bp = Bipartition::isolating(k);
        const QuadratureSet s = build_quadrature_set(L, 1, bp);
        const QuadraturePair l = single_mode_quadratures(L, bp.l, 1);
        const QuadraturePair m = single_mode_quadratures(L, bp.m, 1);
        const auto p_side = s.p_k * s.p_lm - (s.p_k * l.p * m.q + s.p_k * l.q * m.p);
        const auto q_side = s.q_k * s.q_lm - (s.q_k * l.q * m.q - s.q_k * l.p * m.p);
        CHECK(p_side.dense().cwiseAbs().maxCoeff() < 1e-13);
        CHECK(q_side.dense().cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("triple-photon state moments") {
    const double xi = 0.02;
    const QuantumState psi = tps_state(10, xi);
    const MomentTable t = moment_table(psi, {1, 2, 3});
    CHECK(t.max_dropped_imag < 1e-10);
    const auto& o1 = t.order(1);
    // <q1 q23> ~ xi/2, <p1 p23> ~ -xi/2
    CHECK(o1.part(0).sym[0][2] == doctest::Approx(xi / 2).epsilon(1e-3));
    CHECK(o1.part(0).sym[1][3] == doctest::Approx(-xi / 2).epsilon(1e-3));
    for (const auto& om : t.orders) {
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& a = om.part(0);
            const auto& b = om.part(k);
            for (std::size_t i = 0; i < 4; ++i) {
                CHECK(std::abs(b.mean[i]) < 1e-10);
                for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(a.sym[i][j] - b.sym[i][j]) < 1e-8);
            }
            CHECK(std::abs(a.f_k - b.f_k) < 1e-8);
            CHECK(std::abs(a.f_lm - b.f_lm) < 1e-8);
            CHECK(std::abs(om.falling[0] - om.falling[k]) < 1e-8);
        }
    }

    // density-matrix path
    const MomentTable td = moment_table(QuantumState::mixed(psi.layout(), psi.to_density()), {1, 2, 3});
    for (std::size_t oi = 0; oi < 3; ++oi)
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 4; ++j)
                    CHECK(std::abs(t.orders[oi].parts[k].sym[i][j] - td.orders[oi].parts[k].sym[i][j]) < 1e-12);
}

TEST_CASE("moment table json round trip") {
    const MomentTable t = moment_table(tps_state(8, 0.1), {1, 2});
    const nlohmann::json j = to_json(t);
    const MomentTable back = moment_table_from_json(nlohmann::json::parse(j.dump()));
    REQUIRE(back.orders.size() == 2);
    CHECK(back.dims == t.dims);
    CHECK(back.mean_photons == t.mean_photons);
    for (std::size_t oi = 0; oi < 2; ++oi) {
        CHECK(back.orders[oi].n == t.orders[oi].n);
        CHECK(back.orders[oi].falling == t.orders[oi].falling);
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& a = t.orders[oi].parts[k];
            const auto& b = back.orders[oi].parts[k];
            CHECK(a.bipartition == b.bipartition);
            CHECK(a.mean == b.mean);
            CHECK(a.sym == b.sym);
            CHECK(a.im == b.im);
            CHECK(a.f_k == b.f_k);
            CHECK(a.f_lm == b.f_lm);
        }
    }
    nlohmann::json broken = j;
    broken["orders"][0].erase("bipartitions");
    CHECK_THROWS_AS(moment_table_from_json(broken), MissingMomentError);
}

TEST_CASE("engine bookkeeping") {
    ModeLayout L({6, 6, 6});
    const MomentEngine e(L, {1, 2});
    CHECK(e.set(2, 1).n == 2);
    CHECK_THROWS_AS(e.set(3, 0), MissingMomentError);
    CHECK_THROWS_AS(e.compute(vacuum(ModeLayout({6, 6, 5}))), LayoutError);
    const MomentTable t = e.compute(vacuum(L));
    CHECK(t.mean_photons.size() == 3);
    CHECK(t.dims == L.dims());
}
