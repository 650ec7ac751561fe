#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdsr/error.hpp"
#include "tdsr/field.hpp"
#include "tdsr/models.hpp"
#include "tdsr/renormalization.hpp"

namespace tdsr {

enum class SplitStrategy { single, bell_sech, bell_gauss, explicit_parts };

std::string_view split_name(SplitStrategy s);
std::optional<SplitStrategy> parse_split(std::string_view name);

/// u0 = sum_j f_j, one part per renormalization factor.
struct PseudoICs {
    SplitStrategy strategy = SplitStrategy::single;
    std::vector<CVector> parts;
};

///   single      f_1 = u0
///   bell_sech   f_1 = sech(x / sqrt 600) / 300,  f_2 = u0 - f_1
///   bell_gauss  f_2 = 0.05 exp(-x^2), f_3 = 0.15 exp(-x^2), f_1 = u0 - f_2 - f_3
///   explicit    `parts` as given, checked against u0
PseudoICs split_initial_condition(std::span<const Complex> u0, SplitStrategy strategy, std::size_t count,
                                  std::span<const double> x, const std::vector<CVector>& parts = {});

struct GaussianGuess {
    int count = 10;           // N_G
    double width = 1.0;       // d
    double mollifier_a = 1.0;
    double mollifier_b = 1.0;
    double center = 0.0;      // mollifier and sampling window centre
    double length = 1.0;      // centres sampled in [center - length/2, center + length/2]
    std::uint64_t seed = 1;
};

/// exp(b/a^2 - b/(a^2 - x^2)) inside (-a, a), zero outside.
double mollifier(double x, double a, double b);

/// Peak-normalized sum of Gaussians with fixed random centres and independent
/// random amplitudes in [-1, 1] at every time level, times the mollifier.
SpaceTimeField generate_initial_guess(std::span<const double> x, std::size_t levels, const GaussianGuess& g);

enum class GuessPolicy { linear, random };

struct BlockOptions {
    double tolerance = 1e-13;
    int max_iterations = 200;
    /// Accept a metric below `stagnation_floor` that has not improved for
    /// `stagnation_window` iterations.
    double stagnation_floor = 1e-10;
    int stagnation_window = 10;
    /// Divergence: the metric grew on `divergence_window` consecutive
    /// iterations and exceeds `divergence_factor` times the best seen.
    int divergence_window = 5;
    double divergence_factor = 100.0;
    /// Evaluate the telescoping identity every iteration (one extra Duhamel).
    bool check_identities = false;
    RenormOptions renorm;
};

/// The enforced laws and their targets. Dissipative problems carry a single
/// factor governed by the L2 rate equation instead.
struct LawSet {
    std::vector<FunctionalKind> kinds;
    std::vector<double> targets;
    bool dissipative = false;
    double p0 = 0.0;
};

struct IterationRecord {
    int iteration = 0;
    double metric = 0.0;
    std::vector<double> law_residual;  // per law, max over levels
    double telescoping = 0.0;          // when checked
    double reconstruction = 0.0;       // max |sum R_j(0) v_j(0) - u0|
    double seconds = 0.0;
};

struct BlockSolution {
    SpaceTimeField u;
    std::vector<SpaceTimeField> v;
    std::vector<std::vector<double>> factors;  // [law][level]
    std::vector<IterationRecord> history;
    bool converged = false;
    bool stagnated = false;
    double metric = 0.0;
    /// Relative enforced-law error per level, |Q(u) - C| / |C| ([law][level]).
    std::vector<std::vector<double>> law_drift;
    std::optional<DissipativeState> dissipation;
};

/// Renormalized Duhamel iteration on one block of `levels` time levels
/// starting from u0. `guesses`, when given, replaces the default linear
/// propagation of the pseudo initial conditions.
BlockSolution tdsr_solve_block(const Problem& problem, const LinearFlow& flow, std::span<const Complex> u0,
                               const PseudoICs& pseudo, std::size_t levels, const LawSet& laws,
                               const std::vector<SpaceTimeField>& guesses = {},
                               const BlockOptions& options = {});

struct BlockPlan {
    double t_end = 1.0;
    int blocks = 1;
    int steps_per_block = 1;

    double dt() const { return t_end / (static_cast<double>(blocks) * steps_per_block); }
    double block_length() const { return t_end / blocks; }
};

/// Plan from (T, T_1, dt); T / T_1 and T_1 / dt must be integers to 1e-9.
BlockPlan make_plan(double t_end, double block_length, double dt);

struct RunOptions {
    BlockPlan plan;
    std::vector<FunctionalKind> laws;  // empty with a dissipative model
    SplitStrategy split = SplitStrategy::single;
    std::vector<CVector> explicit_parts;
    GuessPolicy guess = GuessPolicy::linear;
    GaussianGuess random_guess;
    BlockOptions block;
    /// Invariants recorded at every stored level.
    std::vector<FunctionalKind> monitored;
    /// Store every k-th global level of u (the final level is always kept).
    std::size_t keep_every = 1;
};

struct BlockSummary {
    int index = 0;
    double t_start = 0.0;
    int iterations = 0;
    double metric = 0.0;
    bool converged = false;
    bool stagnated = false;
    double law_drift_max = 0.0;
    double seconds = 0.0;
};

struct RunResult {
    std::vector<double> times;                  // stored levels
    std::vector<CVector> u;                     // stored levels
    std::vector<std::vector<double>> factors;   // [law][global level]
    std::vector<double> factor_times;           // global levels
    std::vector<std::vector<Complex>> invariants;  // [monitored][stored level]
    std::vector<Complex> invariant_reference;      // values at t = 0
    std::vector<std::vector<double>> law_drift;    // [law][global level]
    std::vector<BlockSummary> blocks;
    std::vector<std::vector<IterationRecord>> histories;  // per block
    std::vector<double> dissipation_residual;  // per step, dissipative runs
    CVector final_state;
    bool complete = false;
    std::optional<ErrorKind> failure;
    std::string failure_message;
};

using BlockObserver = std::function<void(int block, const BlockSolution& solution, double t_start)>;

/// Blocks run in sequence, each starting from the previous terminal state;
/// the shared interface level is stored once. Failures stop the run and are
/// reported in the result with everything computed so far.
RunResult multiblock_run(const Problem& problem, std::span<const Complex> u0, const RunOptions& options,
                         const BlockObserver& observer = {});

}  // namespace tdsr
