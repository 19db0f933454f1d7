#include "tps/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tps/criteria.hpp"
#include "tps/moments.hpp"
#include "tps/stdform.hpp"

namespace tps {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, count));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

struct PointWitnesses {
    double F[3];
    double W[3];
};

PointWitnesses witnesses_at(const MomentTable& table, std::size_t n, const GainVector& g) {
    PointWitnesses w{};
    const FullInseparability fs = witness_F_all(table, n, g);
    for (std::size_t k = 0; k < 3; ++k) {
        w.F[k] = fs.F[k].value;
        w.W[k] = witness_W(table, n, g, k).value;
    }
    return w;
}

std::vector<MomentTable> sweep_tables(const RunConfig& cfg, const ModeLayout& layout,
                                      std::vector<double>* norm_errors) {
    HamiltonianSpec spec = cfg.hamiltonian();
    spec.layout = layout;
    const std::size_t threads = resolve_threads(cfg.threads);
    const std::vector<SweepPoint> points = sweep_xi(spec, EvolutionConfig{}, cfg.xi_grid(), threads);
    const MomentEngine engine(layout, cfg.orders);
    std::vector<MomentTable> tables(points.size());
    parallel_for(points.size(), threads, [&](std::size_t i) { tables[i] = engine.compute(points[i].state); });
    if (norm_errors) {
        norm_errors->clear();
        for (const auto& p : points) norm_errors->push_back(std::abs(std::sqrt(p.state.norm_squared()) - 1.0));
    }
    return tables;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::size_t default_pump_dim(double alpha_p) {
    const double a = std::abs(alpha_p);
    return static_cast<std::size_t>(std::ceil(a * a + 6.0 * a)) + 1;
}

std::vector<double> RunConfig::xi_grid() const {
    if (steps == 1) return {xi_min};
    std::vector<double> grid(steps);
    for (std::size_t i = 0; i < steps; ++i)
        grid[i] = xi_min + (xi_max - xi_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
    return grid;
}

ModeLayout RunConfig::layout() const { return ModeLayout(dims); }

HamiltonianSpec RunConfig::hamiltonian() const {
    HamiltonianSpec spec;
    spec.model = pump;
    spec.kappa = kappa;
    spec.alpha_p = alpha_p;
    spec.layout = layout();
    return spec;
}

RunConfig validate_config(RunConfig cfg) {
    auto positive = [](const char* field, double v) {
        if (!std::isfinite(v) || !(v > 0.0)) throw ConfigError(field, "must be a positive finite number");
    };
    positive("kappa", cfg.kappa);
    positive("alpha-p", cfg.alpha_p);
    if (!std::isfinite(cfg.xi_min) || cfg.xi_min < 0.0) throw ConfigError("xi-min", "must be >= 0");
    if (!std::isfinite(cfg.xi_max) || cfg.xi_max < cfg.xi_min) throw ConfigError("xi-max", "must be >= xi-min");
    if (cfg.steps < 1) throw ConfigError("steps", "must be >= 1");
    if (!std::isfinite(cfg.gain) || cfg.gain == 0.0) throw ConfigError("gain", "must be finite and nonzero");
    if (!(cfg.convergence_tol > 0.0)) throw ConfigError("convergence-tol", "must be positive");

    if (cfg.orders.empty()) throw ConfigError("orders", "at least one order is required");
    std::sort(cfg.orders.begin(), cfg.orders.end());
    cfg.orders.erase(std::unique(cfg.orders.begin(), cfg.orders.end()), cfg.orders.end());
    if (cfg.orders.front() == 0) throw ConfigError("orders", "orders start at 1");

    const bool quantum = cfg.pump == PumpModel::FullQuantumPump;
    if (cfg.dims.empty()) cfg.dims.assign(3, kDefaultTripletDim);
    if (quantum && cfg.dims.size() == 3) cfg.dims.push_back(default_pump_dim(cfg.alpha_p));
    const std::size_t want = quantum ? 4 : 3;
    if (cfg.dims.size() != want)
        throw ConfigError("dims", "expected " + std::to_string(want) + " entries for the " +
                                      (quantum ? "quantum" : "parametric") + " pump, got " +
                                      std::to_string(cfg.dims.size()));
    for (std::size_t d : cfg.dims)
        if (d < 2) throw ConfigError("dims", "every dimension must be >= 2");
    const std::size_t n_max = cfg.orders.back();
    for (std::size_t m = 0; m < 3; ++m)
        if (cfg.dims[m] - 1 <= 3 * n_max)
            throw ConfigError("dims", "cutoff too small for order " + std::to_string(n_max) + " (mode " +
                                          std::to_string(m + 1) + " has cutoff " +
                                          std::to_string(cfg.dims[m] - 1) + ", need > " +
                                          std::to_string(3 * n_max) + ")");
    return cfg;
}

const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{
        "xi",        "n",         "F_1",       "F_2",       "F_3",       "W",          "W_perm2",
        "W_perm3",   "T2_1",      "T2_2",      "T2_3",      "margin_1",  "margin_2",   "margin_3",
        "unc_min_1", "unc_min_2", "unc_min_3", "physical",  "N_1",       "N_2",        "N_3",
        "N_4",       "norm_error", "conv_delta", "converged"};
    return cols;
}

SweepResult run_sweep(const RunConfig& raw) {
    SweepResult result;
    result.config = validate_config(raw);
    const RunConfig& cfg = result.config;
    const GainVector gains = GainVector::uniform(cfg.gain);
    const std::vector<double> grid = cfg.xi_grid();

    std::vector<double> norm_errors;
    const std::vector<MomentTable> tables = sweep_tables(cfg, cfg.layout(), &norm_errors);
    std::vector<MomentTable> bigger;
    if (cfg.check_convergence) bigger = sweep_tables(cfg, cfg.layout().grown(2), nullptr);

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const MomentTable& table = tables[i];
        for (std::size_t n : cfg.orders) {
            SweepRow row;
            row.xi = grid[i];
            row.n = n;
            const PointWitnesses w = witnesses_at(table, n, gains);
            std::copy(std::begin(w.F), std::end(w.F), row.F);
            std::copy(std::begin(w.W), std::end(w.W), row.W);
            for (std::size_t k = 0; k < 3; ++k) {
                const UncertaintyCheck uc = uncertainty_check(table, n, k);
                row.unc_min[k] = uc.min_eigenvalue;
                row.physical = row.physical && uc.pass;
                try {
                    const Theorem2Decision d = theorem2_decide(reduce_to_standard_form(covariance_matrix(table, n, k)));
                    row.t2[k] = to_string(d.decision);
                    row.margin[k] = d.margin;
                } catch (const StandardFormError&) {
                    row.t2[k] = "error";
                    row.margin[k] = kNaN;
                }
            }
            for (std::size_t m = 0; m < 3; ++m) row.photons[m] = table.mean_photons[m];
            row.photons[3] = cfg.pump == PumpModel::FullQuantumPump ? table.mean_photons[3]
                                                                    : cfg.alpha_p * cfg.alpha_p;
            row.norm_error = norm_errors[i];
            if (cfg.check_convergence) {
                const PointWitnesses wb = witnesses_at(bigger[i], n, gains);
                double delta = 0.0;
                for (std::size_t k = 0; k < 3; ++k)
                    delta = std::max({delta, std::abs(wb.F[k] - w.F[k]), std::abs(wb.W[k] - w.W[k])});
                row.conv_delta = delta;
                const bool ok = delta < cfg.convergence_tol;
                row.converged = ok ? "yes" : "no";
                result.all_converged = result.all_converged && ok;
            } else {
                row.conv_delta = kNaN;
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

namespace {

nlohmann::json row_values(const SweepRow& r) {
    auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
    return nlohmann::json::array({num(r.xi),         r.n,           num(r.F[0]),       num(r.F[1]),
                                  num(r.F[2]),       num(r.W[0]),   num(r.W[1]),       num(r.W[2]),
                                  r.t2[0],           r.t2[1],       r.t2[2],           num(r.margin[0]),
                                  num(r.margin[1]),  num(r.margin[2]), num(r.unc_min[0]), num(r.unc_min[1]),
                                  num(r.unc_min[2]), r.physical ? 1 : 0, num(r.photons[0]), num(r.photons[1]),
                                  num(r.photons[2]), num(r.photons[3]), num(r.norm_error), num(r.conv_delta),
                                  r.converged});
}

}  // namespace

void write_csv(const SweepResult& r, std::ostream& os) {
    const auto& cols = sweep_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
    os << '\n';
    for (const SweepRow& row : r.rows) {
        const nlohmann::json vals = row_values(row);
        for (std::size_t c = 0; c < vals.size(); ++c) {
            if (c) os << ',';
            const auto& v = vals[c];
            if (v.is_null()) os << "nan";
            else if (v.is_string()) os << v.get<std::string>();
            else if (v.is_number_float()) os << format_double(v.get<double>());
            else os << v.dump();
        }
        os << '\n';
    }
}

void write_json(const SweepResult& r, std::ostream& os) {
    const auto& cols = sweep_columns();
    nlohmann::json rows = nlohmann::json::array();
    for (const SweepRow& row : r.rows) {
        const nlohmann::json vals = row_values(row);
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t c = 0; c < cols.size(); ++c) obj[cols[c]] = vals[c];
        rows.push_back(std::move(obj));
    }
    nlohmann::json doc{{"columns", cols}, {"rows", rows}};
    os << doc.dump(1) << '\n';
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Triple-photon entanglement sweep"};
    RunConfig cfg;
    std::string pump = "parametric", format = "csv";
    app.set_config("--config", "", "flat key=value file; command-line flags win");
    app.add_option("--pump", pump, "quantum | parametric")->check(CLI::IsMember({"quantum", "parametric"}));
    app.add_option("--kappa", cfg.kappa, "coupling constant");
    app.add_option("--alpha-p", cfg.alpha_p, "pump amplitude");
    app.add_option("--xi-min", cfg.xi_min, "first interaction strength");
    app.add_option("--xi-max", cfg.xi_max, "last interaction strength");
    app.add_option("--steps", cfg.steps, "number of xi points");
    app.add_option("--dims", cfg.dims, "d1,d2,d3[,d4]")->delimiter(',');
    app.add_option("--orders", cfg.orders, "comma-separated hierarchy indices")->delimiter(',');
    app.add_option("--gain", cfg.gain, "witness gain g");
    app.add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--out", cfg.out, "output file (default stdout)");
    app.add_flag("--check-convergence", cfg.check_convergence, "rerun with dims + 2 and flag changed rows");
    app.add_option("--convergence-tol", cfg.convergence_tol, "largest accepted F/W change");
    app.add_option("--threads", cfg.threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    SweepResult result;
    try {
        cfg.pump = pump == "quantum" ? PumpModel::FullQuantumPump : PumpModel::ParametricPump;
        cfg.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
        cfg = validate_config(cfg);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (cfg.pump == PumpModel::FullQuantumPump && coherent_undertruncated(cfg.dims[3], cfg.alpha_p))
        err << "warning: pump dimension " << cfg.dims[3] << " is small for alpha-p " << cfg.alpha_p << '\n';

    try {
        result = run_sweep(cfg);
    } catch (const EvolutionError& e) {
        err << "evolution failed: " << e.what() << '\n';
        return kExitConvergence;
    }

    std::ofstream file;
    std::ostream* sink = &out;
    if (!cfg.out.empty()) {
        file.open(cfg.out);
        if (!file) {
            err << "config error: out: cannot open '" << cfg.out << "'\n";
            return kExitConfig;
        }
        sink = &file;
    }
    if (cfg.format == OutputFormat::Json) write_json(result, *sink);
    else write_csv(result, *sink);

    if (cfg.check_convergence && !result.all_converged) {
        std::size_t flagged = 0;
        for (const auto& row : result.rows) flagged += row.converged == "no";
        err << "convergence check failed on " << flagged << " of " << result.rows.size()
            << " rows (dims + 2 changed F or W by more than " << cfg.convergence_tol << ")\n";
        return kExitConvergence;
    }
    return kExitOk;
}

}  // namespace tps
