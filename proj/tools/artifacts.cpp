#include "artifacts.hpp"

#include <Eigen/Core>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tdsr/error.hpp"

#ifndef TDSR_VERSION
#define TDSR_VERSION "0.0.0"
#endif

namespace tdsr::app {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_fail(const std::string& what) { throw Error(ErrorKind::io, what); }

std::string grid_description(const SpatialGrid& grid) {
    std::ostringstream os;
    os << std::setprecision(17);
    if (const auto* p = std::get_if<PeriodicGrid>(&grid)) {
        os << "periodic";
        for (int a = 0; a < p->dimension(); ++a) os << ' ' << p->length(a) << ':' << p->count(a);
    } else {
        const auto& c = std::get<ChebyshevGrid>(grid);
        os << "chebyshev " << c.left() << ':' << c.right() << ':' << c.intervals();
    }
    return os.str();
}

std::string time_label(double t) {
    std::ostringstream os;
    os << std::setprecision(6) << t;
    return os.str();
}

}  // namespace

CsvWriter::CsvWriter(const fs::path& path, const std::string& kind, const std::vector<std::string>& columns)
    : path_(path), out_(path) {
    if (!out_) io_fail("cannot write " + path.string());
    out_ << "# tdsr-csv v1 " << kind << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n' << std::setprecision(17);
}

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
    out_ << '\n';
    if (!out_) io_fail("write failed on " + path_.string());
}

void CsvWriter::close() {
    out_.close();
    if (out_.fail()) io_fail("cannot close " + path_.string());
}

std::string version_string() {
    std::ostringstream os;
    os << "tdsr " << TDSR_VERSION << ", eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
       << EIGEN_MINOR_VERSION << ", " << fft_backend_version();
    return os.str();
}

void write_manifest(const fs::path& dir, const Settings& settings, const std::string& verb) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) io_fail("cannot create " + dir.string() + ": " + ec.message());
    std::ofstream out(dir / "manifest.txt");
    if (!out) io_fail("cannot write " + (dir / "manifest.txt").string());
    out << "# tdsr manifest\n# verb: " << verb << "\n# versions: " << version_string()
        << "\n# seed: " << settings.text("solver.seed") << "\n\n"
        << settings.render();
    if (!out) io_fail("write failed on manifest");
}

CVector physical(const Scenario& scenario, std::span<const Complex> u) {
    CVector out(u.begin(), u.end());
    for (std::size_t i = 0; i < scenario.lift.size(); ++i) out[i] += scenario.lift[i];
    return out;
}

namespace {

const fs::path& prepared(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) io_fail("cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

std::vector<std::string> history_columns(const Scenario& s) {
    std::vector<std::string> cols{"block", "iteration", "metric"};
    if (s.options.laws.empty())
        cols.push_back("residual_rate");
    for (auto k : s.options.laws) cols.push_back("residual_" + std::string(functional_name(k)));
    cols.push_back("telescoping");
    cols.push_back("reconstruction");
    return cols;
}

}  // namespace

RunRecorder::RunRecorder(const fs::path& dir, const Scenario& scenario, const Settings& settings)
    : dir_(dir),
      scenario_(scenario),
      dt_(scenario.options.plan.dt()),
      steps_(static_cast<std::size_t>(scenario.options.plan.steps_per_block)),
      every_(std::max<std::size_t>(1, scenario.options.keep_every)),
      total_levels_(static_cast<std::size_t>(scenario.options.plan.blocks) * steps_ + 1),
      history_(prepared(dir) / "history.csv", "iteration-history", history_columns(scenario)) {
    for (double t : settings.reals("output.snapshots")) {
        const double g = std::round(t / dt_);
        if (g < 0.0) throw Error(ErrorKind::config, "negative snapshot time " + time_label(t));
        if (g >= static_cast<double>(total_levels_)) continue;
        snapshot_levels_.push_back(static_cast<std::size_t>(g));
    }
    field_enabled_ = settings.flag("output.field");
    if (field_enabled_) {
        field_.open(dir / "field.bin", std::ios::binary);
        if (!field_) io_fail("cannot write " + (dir / "field.bin").string());
    }
}

std::vector<double> RunRecorder::with_lift(std::span<const Complex> level) const {
    const auto u = physical(scenario_, level);
    std::vector<double> out;
    const bool complex = !scenario_.problem.real_field();
    out.reserve(u.size() * (complex ? 2 : 1));
    for (const auto& z : u) {
        out.push_back(z.real());
        if (complex) out.push_back(z.imag());
    }
    return out;
}

void RunRecorder::snapshot(std::size_t global, std::span<const Complex> level) {
    const double t = static_cast<double>(global) * dt_;
    const bool complex = !scenario_.problem.real_field();
    const bool plane = !scenario_.y.empty();
    std::vector<std::string> cols{"x"};
    if (plane) cols.push_back("y");
    if (complex) {
        cols.push_back("re");
        cols.push_back("im");
    } else {
        cols.push_back("u");
    }
    CsvWriter csv(dir_ / ("snapshot_t" + time_label(t) + ".csv"), "snapshot t=" + time_label(t), cols);
    const auto u = physical(scenario_, level);
    for (std::size_t i = 0; i < u.size(); ++i) {
        std::vector<double> row{scenario_.x[i]};
        if (plane) row.push_back(scenario_.y[i]);
        row.push_back(u[i].real());
        if (complex) row.push_back(u[i].imag());
        csv.row(row);
    }
    csv.close();
}

void RunRecorder::field_level(std::span<const Complex> level) {
    const auto values = with_lift(level);
    field_.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!field_) io_fail("write failed on field.bin");
    ++field_levels_;
}

void RunRecorder::on_block(int block, const BlockSolution& solution) {
    for (const auto& rec : solution.history) {
        std::vector<double> row{static_cast<double>(block), static_cast<double>(rec.iteration), rec.metric};
        const std::size_t want = std::max<std::size_t>(1, scenario_.options.laws.size());
        for (std::size_t j = 0; j < want; ++j)
            row.push_back(j < rec.law_residual.size() ? rec.law_residual[j] : std::numeric_limits<double>::quiet_NaN());
        row.push_back(rec.telescoping);
        row.push_back(rec.reconstruction);
        history_.row(row);
    }
    const std::size_t first = block == 0 ? 0 : 1;
    for (std::size_t i = first; i < solution.u.levels(); ++i) {
        const std::size_t global = static_cast<std::size_t>(block) * steps_ + i;
        for (std::size_t s : snapshot_levels_)
            if (s == global) snapshot(global, solution.u.level(i));
        if (field_enabled_ && (global % every_ == 0 || global + 1 == total_levels_)) field_level(solution.u.level(i));
    }
}

void RunRecorder::finish(const RunResult& result) {
    history_.close();

    if (field_enabled_) {
        field_.close();
        std::ofstream side(dir_ / "field.txt");
        if (!side) io_fail("cannot write field.txt");
        side << std::setprecision(17) << "# tdsr field v1\n"
             << "levels = " << field_levels_ << '\n'
             << "points = " << scenario_.problem.points() << '\n'
             << "components = " << (scenario_.problem.real_field() ? 1 : 2) << '\n'
             << "layout = float64 little-endian, time-major, row-major, complex as (re, im)\n"
             << "grid = " << grid_description(scenario_.problem.grid()) << '\n'
             << "dt = " << dt_ << '\n'
             << "level_every = " << every_ << '\n'
             << "complete = " << (result.complete ? "true" : "false") << '\n';
        if (!side) io_fail("write failed on field.txt");
    }

    const auto& monitored = scenario_.options.monitored;
    const auto report = error_report(result, monitored, scenario_.exact);
    if (!monitored.empty()) {
        std::vector<std::string> cols{"t"};
        for (auto k : monitored) {
            const std::string n(functional_name(k));
            cols.insert(cols.end(), {n, n + "_abs_drift", n + "_rel_drift"});
        }
        CsvWriter csv(dir_ / "invariants.csv", "invariant-drift", cols);
        for (std::size_t k = 0; k < result.times.size(); ++k) {
            std::vector<double> row{result.times[k]};
            for (std::size_t m = 0; m < monitored.size(); ++m)
                row.insert(row.end(), {result.invariants[m][k].real(), report.drift[m].absolute[k],
                                       report.drift[m].relative[k]});
            csv.row(row);
        }
        csv.close();
    }

    if (scenario_.exact) {
        CsvWriter csv(dir_ / "error.csv", "solution-error", {"t", "max_abs_error", "relative_error"});
        CVector ref(scenario_.problem.points());
        for (std::size_t k = 0; k < result.times.size(); ++k) {
            scenario_.exact(result.times[k], ref);
            const double scale = max_abs(ref);
            const double e = report.solution_error[k];
            csv.row({result.times[k], e, scale > 0.0 ? e / scale : e});
        }
        csv.close();
    }

    {
        std::vector<std::string> cols{"t"};
        if (scenario_.options.laws.empty()) cols.push_back("R");
        for (auto k : scenario_.options.laws) cols.push_back("R_" + std::string(functional_name(k)));
        CsvWriter csv(dir_ / "factors.csv", "renormalization-factors", cols);
        for (std::size_t i = 0; i < result.factor_times.size(); ++i) {
            std::vector<double> row{result.factor_times[i]};
            for (const auto& f : result.factors) row.push_back(f[i]);
            csv.row(row);
        }
        csv.close();
    }

    CsvWriter blocks(dir_ / "blocks.csv", "blocks",
                     {"block", "t_start", "iterations", "metric", "converged", "stagnated", "law_drift_max"});
    for (const auto& b : result.blocks)
        blocks.row({static_cast<double>(b.index), b.t_start, static_cast<double>(b.iterations), b.metric,
                    b.converged ? 1.0 : 0.0, b.stagnated ? 1.0 : 0.0, b.law_drift_max});
    blocks.close();

    if (!result.dissipation_residual.empty()) {
        CsvWriter csv(dir_ / "dissipation.csv", "dissipation-identity", {"step", "t", "residual"});
        for (std::size_t i = 0; i < result.dissipation_residual.size(); ++i)
            csv.row({static_cast<double>(i), static_cast<double>(i + 1) * dt_, result.dissipation_residual[i]});
        csv.close();
    }
}

}  // namespace tdsr::app
