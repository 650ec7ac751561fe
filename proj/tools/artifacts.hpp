#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scenarios.hpp"

namespace tdsr::app {

/// CSV with a "# tdsr-csv v1 <kind>" first line, a header row and numbers at
/// 17 significant digits.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& kind, const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

std::string version_string();

void write_manifest(const std::filesystem::path& dir, const Settings& settings, const std::string& verb);

/// Streams snapshots, the iteration history and the optional space-time field
/// while the run proceeds, then the invariant, error, block and dissipation
/// tables once it stops.
class RunRecorder {
public:
    RunRecorder(const std::filesystem::path& dir, const Scenario& scenario, const Settings& settings);

    void on_block(int block, const BlockSolution& solution);
    void finish(const RunResult& result);

private:
    void snapshot(std::size_t global, std::span<const Complex> level);
    void field_level(std::span<const Complex> level);
    std::vector<double> with_lift(std::span<const Complex> level) const;

    std::filesystem::path dir_;
    const Scenario& scenario_;
    double dt_ = 0.0;
    std::size_t steps_ = 0;
    std::size_t every_ = 1;
    std::size_t total_levels_ = 0;
    std::vector<std::size_t> snapshot_levels_;
    CsvWriter history_;
    std::ofstream field_;
    bool field_enabled_ = false;
    std::size_t field_levels_ = 0;
};

/// Copy of `u` with the Dirichlet lift added back.
CVector physical(const Scenario& scenario, std::span<const Complex> u);

}  // namespace tdsr::app
