#include "tps/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include <boost/numeric/odeint.hpp>

namespace tps {

void HamiltonianSpec::validate() const {
    const auto modes = layout.mode_count();
    if (model == PumpModel::FullQuantumPump && modes != 4)
        throw LayoutError("quantized pump needs a 4-mode layout (three triplet modes + pump)");
    if (model == PumpModel::ParametricPump && modes != 3)
        throw LayoutError("parametric pump needs a 3-mode layout");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be non-negative");
    if (!(alpha_p > 0.0) || !std::isfinite(alpha_p)) throw std::invalid_argument("alpha_p must be positive");
}

void EvolutionConfig::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("evolution tolerance must be positive");
    if (!(max_step > 0.0)) throw std::invalid_argument("max step must be positive");
}

double HamiltonianSpec::time_for_xi(double xi) const {
    if (!(kappa * alpha_p > 0.0)) throw std::invalid_argument("xi is undefined for zero coupling");
    return xi / (kappa * alpha_p);
}

SparseOperator build_hamiltonian(const HamiltonianSpec& spec) {
    spec.validate();
    const auto& L = spec.layout;
    const cplx i(0.0, 1.0);
    SparseOperator down = annihilation(L, ModeIndex{0}) * annihilation(L, ModeIndex{1}) *
                          annihilation(L, ModeIndex{2});
    if (spec.model == PumpModel::FullQuantumPump) {
        down = down * creation(L, ModeIndex{3});
        // a1 a2 a3 a4+ ; its adjoint is a1+ a2+ a3+ a4
        return (i * spec.kappa) * (down.adjoint() - down);
    }
    return (i * spec.kappa * spec.alpha_p) * (down.adjoint() - down);
}

Integrator resolve_integrator(const EvolutionConfig& cfg, std::size_t dim) {
    if (cfg.integrator != Integrator::Auto) return cfg.integrator;
    return dim < cfg.exact_limit ? Integrator::ExactDiagonalization : Integrator::KrylovExponential;
}

struct Propagator::Spectral {
    Eigen::MatrixXcd vectors;
    Eigen::VectorXd values;
};

Propagator::Propagator(SparseOperator hamiltonian, EvolutionConfig cfg)
    : h_(std::move(hamiltonian)), cfg_(cfg), integrator_(resolve_integrator(cfg, h_.dim())) {
    cfg_.validate();
    if (integrator_ == Integrator::ExactDiagonalization) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h_.dense());
        if (es.info() != Eigen::Success) throw EvolutionError("Hamiltonian diagonalization failed", 0.0);
        spectral_ = std::make_unique<Spectral>(Spectral{es.eigenvectors(), es.eigenvalues()});
    }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

Ket Propagator::apply(const Ket& psi, double t) const {
    if (t < 0.0) throw std::invalid_argument("evolution time must be non-negative");
    if (static_cast<std::size_t>(psi.size()) != h_.dim()) throw LayoutError("state dimension mismatch");
    if (t == 0.0) return psi;
    switch (integrator_) {
        case Integrator::ExactDiagonalization: {
            const auto& s = *spectral_;
            Ket c = s.vectors.adjoint() * psi;
            for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(cplx(0.0, -s.values(k) * t));
            return s.vectors * c;
        }
        case Integrator::KrylovExponential: return krylov(psi, t);
        case Integrator::AdaptiveODE: return ode(psi, t);
        case Integrator::Auto: break;
    }
    throw std::logic_error("unresolved integrator");
}

QuantumState Propagator::apply(const QuantumState& state, double t) const {
    if (!(state.layout() == h_.layout())) throw LayoutError("state layout differs from Hamiltonian layout");
    if (state.is_pure()) return QuantumState::pure(state.layout(), apply(state.ket(), t));
    // rho -> U rho U^dagger, one column at a time
    DensityMatrix half(state.density().rows(), state.density().cols());
    for (Eigen::Index c = 0; c < half.cols(); ++c) half.col(c) = apply(Ket(state.density().col(c)), t);
    DensityMatrix adj = half.adjoint();
    DensityMatrix out(adj.rows(), adj.cols());
    for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c) = apply(Ket(adj.col(c)), t);
    return QuantumState::mixed(state.layout(), out.adjoint());
}

Ket Propagator::krylov(const Ket& psi, double t) const {
    const SpMat& H = h_.matrix();
    const Eigen::Index dim = psi.size();
    const Eigen::Index m_max = std::min<Eigen::Index>(40, dim);
    Ket v = psi;
    double remaining = t;
    double tau = std::min(t, cfg_.max_step);
    const double min_tau = 1e-14 * t;

    while (remaining > 0.0) {
        const double beta0 = v.norm();
        if (beta0 == 0.0) return v;

        // Lanczos with full reorthogonalization
        Eigen::MatrixXcd V(dim, m_max + 1);
        Eigen::VectorXd alpha(m_max), beta(m_max);
        V.col(0) = v / beta0;
        Eigen::Index m = m_max;
        bool breakdown = false;
        for (Eigen::Index j = 0; j < m_max; ++j) {
            Ket w = H * V.col(j);
            alpha(j) = V.col(j).dot(w).real();
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index k = 0; k <= j; ++k) w -= V.col(k).dot(w) * V.col(k);
            beta(j) = w.norm();
            if (beta(j) <= 1e-13 * std::max(1.0, std::abs(alpha(j)))) {
                m = j + 1;
                breakdown = true;
                break;
            }
            V.col(j + 1) = w / beta(j);
        }

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            T(j, j) = alpha(j);
            if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta(j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const Eigen::MatrixXd& Q = es.eigenvectors();
        const Eigen::VectorXd& lam = es.eigenvalues();

        auto small_exp = [&](double step) {
            Eigen::VectorXcd c(m);
            for (Eigen::Index k = 0; k < m; ++k) c(k) = std::exp(cplx(0.0, -lam(k) * step)) * Q(0, k);
            return Eigen::VectorXcd(Q.cast<cplx>() * c);
        };

        double step = std::min(tau, remaining);
        Eigen::VectorXcd y;
        for (;;) {
            y = small_exp(step);
            if (breakdown) break;
            const double err = beta0 * beta(m - 1) * std::abs(y(m - 1));
            if (err <= cfg_.tolerance * step / t) break;
            step *= 0.5;
            if (step < min_tau) throw EvolutionError("Krylov propagation did not converge", err);
        }
        v = beta0 * (V.leftCols(m) * y);
        remaining -= step;
        if (remaining < 1e-15 * t) remaining = 0.0;
        tau = std::min(cfg_.max_step, 2.0 * step);
    }
    return v;
}

Ket Propagator::ode(const Ket& psi, double t) const {
    namespace odeint = boost::numeric::odeint;
    using state_type = std::vector<cplx>;
    const SpMat& H = h_.matrix();
    state_type x(psi.data(), psi.data() + psi.size());
    auto rhs = [&H](const state_type& y, state_type& dydt, double) {
        Eigen::Map<const Ket> ym(y.data(), static_cast<Eigen::Index>(y.size()));
        Eigen::Map<Ket> dm(dydt.data(), static_cast<Eigen::Index>(dydt.size()));
        dm.noalias() = cplx(0.0, -1.0) * (H * ym);
    };
    const double tol = std::max(cfg_.tolerance, 1e-14);
    auto stepper = odeint::make_controlled(tol, tol, cfg_.max_step, odeint::runge_kutta_dopri5<state_type>());
    std::size_t steps = 0;
    try {
        steps = odeint::integrate_adaptive(stepper, rhs, x, 0.0, t, std::min(cfg_.max_step, t) * 1e-2);
    } catch (const std::exception& e) {
        throw EvolutionError(std::string("adaptive ODE integration failed: ") + e.what(), 0.0);
    }
    Ket out = Eigen::Map<Ket>(x.data(), static_cast<Eigen::Index>(x.size()));
    const double drift = std::abs(out.norm() - psi.norm());
    if (drift > std::max(1e-8, 1e3 * tol))
        throw EvolutionError("adaptive ODE lost norm after " + std::to_string(steps) + " steps", drift);
    return out;
}

QuantumState evolve(const QuantumState& state, const HamiltonianSpec& spec, const EvolutionConfig& cfg,
                    double t) {
    if (t < 0.0) throw std::invalid_argument("evolution time must be non-negative");
    if (!(state.layout() == spec.layout)) throw LayoutError("state layout differs from Hamiltonian layout");
    if (t == 0.0) return state;
    Propagator prop(build_hamiltonian(spec), cfg);
    return prop.apply(state, t);
}

QuantumState initial_state(const HamiltonianSpec& spec) {
    spec.validate();
    if (spec.model == PumpModel::FullQuantumPump) return coherent(spec.layout, ModeIndex{3}, spec.alpha_p);
    return vacuum(spec.layout);
}

std::vector<SweepPoint> sweep_xi(const HamiltonianSpec& spec, const EvolutionConfig& cfg,
                                 const std::vector<double>& xi_grid, std::size_t threads) {
    if (!std::is_sorted(xi_grid.begin(), xi_grid.end())) throw std::invalid_argument("xi grid must be ascending");
    if (!xi_grid.empty() && xi_grid.front() < 0.0) throw std::invalid_argument("xi must be non-negative");
    const QuantumState psi0 = initial_state(spec);
    const Propagator prop(build_hamiltonian(spec), cfg);

    std::vector<std::optional<QuantumState>> states(xi_grid.size());
    std::vector<std::exception_ptr> errors(xi_grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < xi_grid.size(); i = next++) {
            try {
                states[i] = prop.apply(psi0, spec.time_for_xi(xi_grid[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, xi_grid.size()));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    // report the failure at the lowest grid index
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<SweepPoint> out;
    out.reserve(xi_grid.size());
    for (std::size_t i = 0; i < xi_grid.size(); ++i) out.push_back({xi_grid[i], std::move(*states[i])});
    return out;
}

}  // namespace tps
