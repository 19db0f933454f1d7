#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "tps/dynamics.hpp"

namespace tps {

enum class OutputFormat { Csv, Json };

struct RunConfig {
    PumpModel pump = PumpModel::ParametricPump;
    double kappa = 1.0;
    double alpha_p = 3.1622776601683795;
    double xi_min = 0.0;
    double xi_max = 0.2;
    std::size_t steps = 41;
    /// Empty means 16 per triplet mode (plus the pump default for the quantized pump).
    std::vector<std::size_t> dims;
    std::vector<std::size_t> orders{1, 2, 3};
    double gain = 1.0;
    OutputFormat format = OutputFormat::Csv;
    bool check_convergence = false;
    /// Largest |change| of any F or W under dims + 2 before a row is flagged.
    double convergence_tol = 1e-4;
    /// Empty means standard output.
    std::string out;
    /// 0 means available parallelism.
    std::size_t threads = 0;

    std::vector<double> xi_grid() const;
    ModeLayout layout() const;
    HamiltonianSpec hamiltonian() const;
};

class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

inline constexpr std::size_t kDefaultTripletDim = 16;
/// ceil(|alpha|^2 + 6|alpha|) + 1
std::size_t default_pump_dim(double alpha_p);

RunConfig validate_config(RunConfig cfg);

/// Fixed output columns, in order.
const std::vector<std::string>& sweep_columns();

struct SweepRow {
    double xi = 0.0;
    std::size_t n = 1;
    double F[3]{};
    /// Printed form (k = 1) followed by the two permuted variants.
    double W[3]{};
    std::string t2[3];
    double margin[3]{};
    double unc_min[3]{};
    bool physical = true;
    double photons[4]{};
    double norm_error = 0.0;
    /// NaN when the convergence check is off.
    double conv_delta = 0.0;
    /// "yes", "no" or "unchecked".
    std::string converged = "unchecked";
};

struct SweepResult {
    RunConfig config;
    std::vector<SweepRow> rows;
    bool all_converged = true;
};

SweepResult run_sweep(const RunConfig& cfg);

void write_csv(const SweepResult& r, std::ostream& os);
void write_json(const SweepResult& r, std::ostream& os);

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitConvergence = 3 };

/// Parses flags (and an optional flat key=value file via --config), runs the
/// sweep and writes the result. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tps
