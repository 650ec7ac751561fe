#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include "artifacts.hpp"
#include "tdsr/error.hpp"

namespace tdsr::app {

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string scenario;
    std::string config;
    std::string out;
    std::optional<std::int64_t> seed;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    cmd->add_option("scenario", a.scenario, "Built-in scenario name");
    cmd->add_option("--config", a.config, "Config file");
    cmd->add_option("--out", a.out, "Output directory");
    cmd->add_option("--seed", a.seed, "Random seed (solver.seed)");
    cmd->add_option("--set", a.sets, "Override, section.key=value (repeatable)");
}

Settings resolve(const CommonArgs& a) {
    std::vector<Assignment> file;
    if (!a.config.empty()) file = read_config_file(a.config);
    std::string name = a.scenario;
    for (const auto& as : file) {
        if (as.key != "scenario.name") continue;
        if (!name.empty() && name != as.value)
            throw Error(ErrorKind::config, "scenario '" + name + "' conflicts with config scenario '" + as.value + "'");
        name = as.value;
    }
    if (name.empty()) throw Error(ErrorKind::config, "no scenario given (positional or scenario.name in the config)");
    Settings s = scenario_defaults(name);
    for (const auto& as : file) {
        if (as.key == "scenario.name") continue;
        try {
            s.set(as.key, as.value);
        } catch (const Error& e) {
            throw Error(ErrorKind::config, a.config + ":" + std::to_string(as.line) + ": " + e.what());
        }
    }
    for (const auto& text : a.sets) {
        const auto as = parse_override(text);
        if (as.key == "scenario.name") throw Error(ErrorKind::config, "the scenario cannot be overridden with --set");
        s.set(as.key, as.value);
    }
    if (a.seed) s.set("solver.seed", std::to_string(*a.seed));
    return s;
}

fs::path output_dir(const CommonArgs& a, const Settings& s) {
    if (!a.out.empty()) return a.out;
    if (const char* env = std::getenv("TDSR_OUT_DIR"); env && *env) return fs::path(env) / s.text("scenario.name");
    return fs::path("tdsr-out") / s.text("scenario.name");
}

int exit_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::validation:
        case ErrorKind::split:
        case ErrorKind::degenerate_split:
            return exit_config;
        case ErrorKind::io:
            return exit_io;
        default:
            return exit_solver;
    }
}

int failure_code(const RunResult& r) { return r.failure ? exit_for(*r.failure) : exit_solver; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Executed {
    RunResult result;
    double seconds = 0.0;
};

Executed execute(const Scenario& sc, const Settings& s, const fs::path& dir) {
    RunRecorder recorder(dir, sc, s);
    const auto start = std::chrono::steady_clock::now();
    auto result = multiblock_run(sc.problem, sc.u0, sc.options,
                                 [&](int b, const BlockSolution& sol, double) { recorder.on_block(b, sol); });
    const double seconds = seconds_since(start);
    recorder.finish(result);
    return {std::move(result), seconds};
}

void summarize(const Scenario& sc, const Executed& ex, std::ostream& out) {
    const auto& r = ex.result;
    int iterations = 0;
    for (const auto& b : r.blocks) iterations += b.iterations;
    out << sc.name << ": " << r.blocks.size() << '/' << sc.options.plan.blocks << " blocks, " << iterations
        << " iterations, " << std::fixed << std::setprecision(2) << ex.seconds << " s\n"
        << std::defaultfloat << std::setprecision(3);
    for (std::size_t j = 0; j < r.law_drift.size(); ++j)
        if (!r.law_drift[j].empty())
            out << "  " << functional_name(sc.options.laws[j]) << " relative drift at end: " << r.law_drift[j].back()
                << '\n';
    if (sc.exact && !r.times.empty()) {
        CVector ref(sc.problem.points());
        sc.exact(r.times.back(), ref);
        out << "  max error at t = " << r.times.back() << ": " << max_abs_diff(r.u.back(), ref) << '\n';
    }
}

int run_verb(const CommonArgs& a, std::ostream& out, std::ostream& err) {
    const Settings s = resolve(a);
    const fs::path dir = output_dir(a, s);
    const Scenario sc = build_scenario(s);
    write_manifest(dir, s, "run");
    const auto ex = execute(sc, s, dir);
    summarize(sc, ex, out);
    out << "  artifacts in " << dir.string() << '\n';
    if (!ex.result.complete) {
        err << "solver failure: " << ex.result.failure_message << '\n';
        return failure_code(ex.result);
    }
    return exit_ok;
}

int list_verb(bool tsv, std::ostream& out) {
    for (const auto& info : scenario_catalog()) {
        if (tsv)
            out << info.name << '\t' << info.figure << '\t' << info.summary << '\n';
        else
            out << std::left << std::setw(22) << info.name << std::setw(11) << info.figure << info.summary << '\n';
    }
    return exit_ok;
}

std::string exact_text(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

int sweep_verb(const CommonArgs& a, int levels, std::ostream& out, std::ostream& err) {
    if (levels < 2) throw Error(ErrorKind::config, "a sweep needs at least two step sizes");
    const Settings base = resolve(a);
    const fs::path dir = output_dir(a, base);
    {
        const Scenario probe = build_scenario(base);
        if (!probe.exact) throw Error(ErrorKind::config, base.text("scenario.name") + " has no exact solution to sweep against");
    }
    write_manifest(dir, base, "sweep");
    const double dt0 = scenario_dt(base);
    CsvWriter csv(dir / "sweep.csv", "dt-sweep", {"dt", "final_error", "iterations", "converged"});
    std::vector<double> dts, errors;
    int code = exit_ok;
    for (int k = 0; k < levels; ++k) {
        Settings s = base;
        const double dt = dt0 / std::pow(2.0, k);
        s.set("time.dt", exact_text(dt));
        s.set("output.snapshots", "");
        s.set("output.field", "false");
        const Scenario sc = build_scenario(s);
        const auto ex = execute(sc, s, dir / ("dt_" + std::to_string(k)));
        int iterations = 0;
        for (const auto& b : ex.result.blocks) iterations += b.iterations;
        double error = std::numeric_limits<double>::quiet_NaN();
        if (ex.result.complete) {
            CVector ref(sc.problem.points());
            sc.exact(ex.result.times.back(), ref);
            error = max_abs_diff(ex.result.final_state, ref);
            dts.push_back(dt);
            errors.push_back(error);
        } else {
            err << "dt = " << dt << ": " << ex.result.failure_message << '\n';
            code = failure_code(ex.result);
        }
        csv.row({dt, error, static_cast<double>(iterations), ex.result.complete ? 1.0 : 0.0});
        out << "dt = " << std::setprecision(6) << dt << "  error = " << std::setprecision(3) << error << "  ("
            << std::fixed << std::setprecision(2) << ex.seconds << " s)\n"
            << std::defaultfloat;
    }
    csv.close();
    if (dts.size() >= 2) {
        const auto fit = convergence_order(errors, dts);
        CsvWriter order(dir / "order.csv", "order-fit", {"slope", "points_used", "trimmed"});
        order.row({fit.slope, static_cast<double>(fit.used), fit.trimmed ? 1.0 : 0.0});
        order.close();
        out << "fitted order " << std::setprecision(4) << fit.slope << " from " << fit.used << " points"
            << (fit.trimmed ? " (trimmed)" : "") << '\n';
    }
    return code;
}

int compare_verb(const CommonArgs& a, std::ostream& out, std::ostream& err) {
    const Settings s = resolve(a);
    const fs::path dir = output_dir(a, s);
    const Scenario sc = build_scenario(s);
    write_manifest(dir, s, "compare");
    const auto ex = execute(sc, s, dir);
    summarize(sc, ex, out);
    if (!ex.result.complete) {
        err << "solver failure: " << ex.result.failure_message << '\n';
        return failure_code(ex.result);
    }

    ReferenceOptions ro;
    ro.keep_every = sc.options.keep_every;
    const auto start = std::chrono::steady_clock::now();
    const auto ref = etdrk4_run(sc.problem, sc.u0, sc.options.plan.dt(), sc.options.plan.t_end, ro);
    const double ref_seconds = seconds_since(start);
    if (ref.times.size() != ex.result.times.size())
        throw Error(ErrorKind::dimension, "stored levels of the two solvers do not line up");

    CsvWriter csv(dir / "compare.csv", "tdsr-vs-etdrk4", {"t", "tdsr_error", "etdrk4_error", "difference"});
    CVector exact(sc.problem.points());
    double worst = 0.0;
    for (std::size_t k = 0; k < ref.times.size(); ++k) {
        double e_tdsr = std::numeric_limits<double>::quiet_NaN(), e_ref = e_tdsr;
        if (sc.exact) {
            sc.exact(ref.times[k], exact);
            e_tdsr = max_abs_diff(ex.result.u[k], exact);
            e_ref = max_abs_diff(ref.u[k], exact);
        }
        const double diff = max_abs_diff(ex.result.u[k], ref.u[k]);
        worst = std::max(worst, diff);
        csv.row({ref.times[k], e_tdsr, e_ref, diff});
    }
    csv.close();
    out << "  etdrk4: " << std::fixed << std::setprecision(2) << ref_seconds << " s" << std::defaultfloat
        << std::setprecision(3) << ", max difference " << worst << '\n';
    return exit_ok;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-dependent spectral renormalization solver"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, compare_args;
    bool tsv = false;
    int levels = 4;
    auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
    add_common(run, run_args);
    auto* list = app.add_subcommand("list", "List built-in scenarios");
    list->add_flag("--tsv", tsv, "Tab-separated output");
    auto* sweep = app.add_subcommand("sweep", "Halve the time step repeatedly and fit the convergence order");
    add_common(sweep, sweep_args);
    sweep->add_option("--levels", levels, "Number of step sizes")->capture_default_str();
    auto* compare = app.add_subcommand("compare", "Run the scenario and an ETDRK4 reference at the same step");
    add_common(compare, compare_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return exit_config;
    }

    try {
        if (*list) return list_verb(tsv, out);
        if (*run) return run_verb(run_args, out, err);
        if (*sweep) return sweep_verb(sweep_args, levels, out, err);
        return compare_verb(compare_args, out, err);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return exit_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << e.what() << '\n';
        return exit_io;
    }
}

}  // namespace tdsr::app
