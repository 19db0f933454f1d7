#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tps/fock.hpp"

namespace tps {

enum class PumpModel { FullQuantumPump, ParametricPump };

/// Three-mode down-conversion Hamiltonian (hbar = 1).
///
/// FullQuantumPump:  H = i kappa (a1+ a2+ a3+ a4 - a1 a2 a3 a4+)   on 4 modes
/// ParametricPump:   H = i kappa alpha_p (a1+ a2+ a3+ - a1 a2 a3)  on 3 modes
///
/// alpha_p is the (real) coherent pump amplitude. For the quantized pump it
/// only enters through the initial state and the xi = kappa alpha_p t map.
struct HamiltonianSpec {
    PumpModel model = PumpModel::ParametricPump;
    double kappa = 1.0;
    double alpha_p = 3.1622776601683795;
    ModeLayout layout;

    void validate() const;
    /// Time corresponding to interaction strength xi.
    double time_for_xi(double xi) const;
};

enum class Integrator { Auto, ExactDiagonalization, KrylovExponential, AdaptiveODE };

struct EvolutionConfig {
    Integrator integrator = Integrator::Auto;
    double tolerance = 1e-12;
    /// Largest internal time step for the Krylov and ODE integrators.
    double max_step = 0.05;
    /// Auto picks exact diagonalization strictly below this total dimension.
    std::size_t exact_limit = 4096;

    void validate() const;
};

class EvolutionError : public std::runtime_error {
public:
    EvolutionError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

SparseOperator build_hamiltonian(const HamiltonianSpec& spec);

/// Resolves Integrator::Auto for a given dimension.
Integrator resolve_integrator(const EvolutionConfig& cfg, std::size_t dim);

/// Applies exp(-iHt) for a fixed Hamiltonian; reusable across many times.
class Propagator {
public:
    Propagator(SparseOperator hamiltonian, EvolutionConfig cfg);
    ~Propagator();
    Propagator(Propagator&&) noexcept;
    Propagator& operator=(Propagator&&) noexcept;

    Ket apply(const Ket& psi, double t) const;
    QuantumState apply(const QuantumState& state, double t) const;
    Integrator integrator() const { return integrator_; }

private:
    SparseOperator h_;
    EvolutionConfig cfg_;
    Integrator integrator_;
    struct Spectral;
    std::unique_ptr<Spectral> spectral_;

    Ket krylov(const Ket& psi, double t) const;
    Ket ode(const Ket& psi, double t) const;
};

QuantumState evolve(const QuantumState& state, const HamiltonianSpec& spec, const EvolutionConfig& cfg,
                    double t);

/// Initial state of the down-conversion run: triplet vacuum, pump coherent
/// with amplitude alpha_p for the quantized pump.
QuantumState initial_state(const HamiltonianSpec& spec);

struct SweepPoint {
    double xi;
    QuantumState state;
};

/// Evolves the initial state to every xi of an ascending grid. Grid points are
/// independent and run on up to `threads` workers; output is in grid order.
std::vector<SweepPoint> sweep_xi(const HamiltonianSpec& spec, const EvolutionConfig& cfg,
                                 const std::vector<double>& xi_grid, std::size_t threads = 1);

}  // namespace tps
