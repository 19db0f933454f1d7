#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tps/dynamics.hpp"
#include "tps/moments.hpp"

using namespace tps;

namespace {

HamiltonianSpec parametric(std::vector<std::size_t> dims, double kappa = 1.0, double alpha = std::sqrt(10.0)) {
    HamiltonianSpec s;
    s.model = PumpModel::ParametricPump;
    s.kappa = kappa;
    s.alpha_p = alpha;
    s.layout = ModeLayout(std::move(dims));
    return s;
}

double mean_number(const QuantumState& s, std::size_t mode) {
    return expectation(s, number(s.layout(), ModeIndex{mode})).real();
}

}  // namespace

TEST_CASE("parametric Hamiltonian matrix elements") {
    const auto spec = parametric({2, 2, 2}, 0.7, 1.3);
    const SparseOperator H = build_hamiltonian(spec);
    CHECK(H.hermiticity_error() < 1e-12);
    Ket vac = Ket::Zero(8);
    vac(0) = 1.0;
    const Ket out = H.apply(vac);
    CHECK(std::abs(out(7) - cplx(0.0, 0.7 * 1.3)) < 1e-15);
    CHECK(std::abs(out.norm() - 0.7 * 1.3) < 1e-15);

    // dense oracle i k a (A+ - A), A = a (x) a (x) a
    const auto a = oracle::annihilation(3);
    const auto A = oracle::kron(oracle::kron(a, a), a);
    const Eigen::MatrixXcd ref = cplx(0.0, 0.7 * 1.3) * (A.adjoint() - A);
    const auto H3 = build_hamiltonian(parametric({3, 3, 3}, 0.7, 1.3)).dense();
    CHECK((H3 - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("quantum pump Hamiltonian") {
    HamiltonianSpec spec;
    spec.model = PumpModel::FullQuantumPump;
    spec.kappa = 0.4;
    spec.layout = ModeLayout({2, 2, 2, 2});
    const SparseOperator H = build_hamiltonian(spec);
    CHECK(H.hermiticity_error() < 1e-12);
    const std::size_t in[] = {0, 0, 0, 1}, target[] = {1, 1, 1, 0};
    Ket psi = Ket::Zero(16);
    psi(static_cast<Eigen::Index>(spec.layout.index_of(in))) = 1.0;
    const Ket out = H.apply(psi);
    CHECK(std::abs(out(static_cast<Eigen::Index>(spec.layout.index_of(target))) - cplx(0.0, 0.4)) < 1e-15);
    CHECK(std::abs(out.norm() - 0.4) < 1e-15);

    const auto a = oracle::annihilation(2);
    const auto D = oracle::kron(oracle::kron(oracle::kron(a, a), a), a.adjoint());
    const Eigen::MatrixXcd ref = cplx(0.0, 0.4) * (D.adjoint() - D);
    CHECK((H.dense() - ref).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Hamiltonian spec validation") {
    CHECK_THROWS_AS(build_hamiltonian(parametric({3, 3, 3, 3})), LayoutError);
    HamiltonianSpec q;
    q.model = PumpModel::FullQuantumPump;
    q.layout = ModeLayout({3, 3, 3});
    CHECK_THROWS_AS(build_hamiltonian(q), LayoutError);
    CHECK_THROWS_AS(build_hamiltonian(parametric({3, 3, 3}, -1.0)), std::invalid_argument);
    CHECK_THROWS_AS(build_hamiltonian(parametric({3, 3, 3}, 1.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(parametric({3, 3, 3}, 0.0).time_for_xi(0.1), std::invalid_argument);
    CHECK(parametric({3, 3, 3}, 2.0, 5.0).time_for_xi(1.0) == doctest::Approx(0.1));
}

TEST_CASE("trivial evolutions") {
    const auto spec = parametric({6, 6, 6});
    const QuantumState v = vacuum(spec.layout);
    CHECK((evolve(v, spec, {}, 0.0).ket() - v.ket()).norm() == 0.0);
    const auto frozen = parametric({6, 6, 6}, 0.0);
    CHECK((evolve(v, frozen, {}, 3.0).ket() - v.ket()).norm() < 1e-14);
    CHECK_THROWS_AS(evolve(v, spec, {}, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(evolve(vacuum(ModeLayout({5, 6, 6})), spec, {}, 1.0), LayoutError);
    EvolutionConfig bad;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(evolve(v, spec, bad, 1.0), std::invalid_argument);
}

TEST_CASE("integrators agree") {
    const auto spec = parametric({10, 10, 10});
    const double t = spec.time_for_xi(0.1);
    const QuantumState v = vacuum(spec.layout);
    EvolutionConfig ed, kr, ode;
    ed.integrator = Integrator::ExactDiagonalization;
    kr.integrator = Integrator::KrylovExponential;
    ode.integrator = Integrator::AdaptiveODE;
    ode.tolerance = 1e-11;
    const Ket a = evolve(v, spec, ed, t).ket();
    const Ket b = evolve(v, spec, kr, t).ket();
    const Ket c = evolve(v, spec, ode, t).ket();
    CHECK((a - c).norm() < 1e-7);
    CHECK((a - b).norm() < 1e-10);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);
    CHECK(std::abs(b.norm() - 1.0) < 1e-10);

    // leading order: amplitude of |111> is xi
    const std::size_t occ[] = {1, 1, 1};
    const cplx amp = a(static_cast<Eigen::Index>(spec.layout.index_of(occ)));
    CHECK(std::abs(amp.real() - 0.1) < 0.1 * 0.1 * 0.1 * 2.0);
    CHECK(std::abs(amp.imag()) < 1e-12);

    CHECK(resolve_integrator({}, 4095) == Integrator::ExactDiagonalization);
    CHECK(resolve_integrator({}, 4096) == Integrator::KrylovExponential);
}

TEST_CASE("density matrices evolve by conjugation") {
    const auto spec = parametric({5, 5, 5});
    const double t = spec.time_for_xi(0.3);
    Ket psi = Ket::Zero(125);
    psi(0) = std::sqrt(0.5);
    psi(31) = cplx(0.0, std::sqrt(0.5));
    const QuantumState pure = QuantumState::pure(spec.layout, psi);
    const QuantumState mixed = QuantumState::mixed(spec.layout, pure.to_density());
    for (Integrator integ : {Integrator::ExactDiagonalization, Integrator::KrylovExponential}) {
        EvolutionConfig cfg;
        cfg.integrator = integ;
        const QuantumState p = evolve(pure, spec, cfg, t);
        const QuantumState m = evolve(mixed, spec, cfg, t);
        CHECK((m.density() - p.to_density()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(m.norm_squared() - 1.0) < 1e-10);
    }
}

TEST_CASE("sweep") {
    const auto spec = parametric({10, 10, 10});
    const auto one = sweep_xi(spec, {}, {0.0});
    REQUIRE(one.size() == 1);
    CHECK((one[0].state.ket() - vacuum(spec.layout).ket()).norm() == 0.0);

    const auto two = sweep_xi(spec, {}, {0.05, 0.15});
    const QuantumState direct = evolve(vacuum(spec.layout), spec, {}, spec.time_for_xi(0.15));
    CHECK((two[1].state.ket() - direct.ket()).norm() < 1e-9);

    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.01 * i);
    const auto serial = sweep_xi(spec, {}, grid, 1);
    const auto parallel = sweep_xi(spec, {}, grid, 4);
    double prev = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(serial[i].xi == grid[i]);
        CHECK((serial[i].state.ket() - parallel[i].state.ket()).norm() == 0.0);
        const QuantumState& s = serial[i].state;
        CHECK(std::abs(std::sqrt(s.norm_squared()) - 1.0) < 1e-8);
        const double n1 = mean_number(s, 0);
        CHECK(std::abs(n1 - mean_number(s, 1)) < 1e-8);
        CHECK(std::abs(n1 - mean_number(s, 2)) < 1e-8);
        CHECK(n1 > prev);
        prev = n1;
    }
    // <N1> ~ xi^2 at leading order
    CHECK(mean_number(serial[1].state, 0) / (0.01 * 0.01) == doctest::Approx(1.0).epsilon(1e-3));

    CHECK_THROWS_AS(sweep_xi(spec, {}, {0.2, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(sweep_xi(spec, {}, {-0.1}), std::invalid_argument);
}

TEST_CASE("quantum pump conserves N1 + N4") {
    HamiltonianSpec spec;
    spec.model = PumpModel::FullQuantumPump;
    spec.alpha_p = std::sqrt(2.0);
    spec.layout = ModeLayout({6, 6, 6, 14});
    const QuantumState psi0 = initial_state(spec);
    const double before = mean_number(psi0, 0) + mean_number(psi0, 3);
    EvolutionConfig cfg;
    cfg.integrator = Integrator::KrylovExponential;
    const auto pts = sweep_xi(spec, cfg, {0.1, 0.3});
    for (const auto& p : pts) {
        CHECK(std::abs(mean_number(p.state, 0) + mean_number(p.state, 3) - before) < 1e-7);
        CHECK(std::abs(std::sqrt(p.state.norm_squared()) - 1.0) < 1e-8);
        CHECK(std::abs(mean_number(p.state, 0) - mean_number(p.state, 2)) < 1e-8);
    }
    CHECK(mean_number(pts[1].state, 0) > mean_number(pts[0].state, 0));
}
