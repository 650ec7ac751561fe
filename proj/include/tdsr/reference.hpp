#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tdsr/contour.hpp"
#include "tdsr/driver.hpp"
#include "tdsr/field.hpp"
#include "tdsr/models.hpp"

namespace tdsr {

struct ReferenceOptions {
    /// max |u| above this aborts with an instability error.
    double blowup_threshold = 1e6;
    /// Store every k-th step (the final step is always kept).
    std::size_t keep_every = 1;
    ScalarContour contour;
};

struct ReferenceSolution {
    std::vector<double> times;
    std::vector<CVector> u;
};

/// Fourth-order exponential Runge-Kutta (Cox-Matthews) with fixed step.
/// Works on both the Fourier-symbol and the collocation-matrix models.
ReferenceSolution etdrk4_run(const Problem& problem, std::span<const Complex> u0, double dt, double t_end,
                             const ReferenceOptions& options = {});

struct OrderFit {
    double slope = 0.0;
    std::size_t used = 0;
    /// Points were dropped for sitting at the round-off floor or breaking
    /// monotone decay at the fine end.
    bool trimmed = false;
};

/// Least-squares slope of log(error) against log(dt).
OrderFit convergence_order(std::span<const double> errors, std::span<const double> dts, double floor = 1e-12);

struct InvariantDrift {
    FunctionalKind kind{};
    std::vector<double> absolute;
    std::vector<double> relative;
};

struct ErrorReport {
    std::vector<double> times;
    /// max_x |u - u_exact|, empty when no exact solution is known.
    std::vector<double> solution_error;
    std::vector<InvariantDrift> drift;
    std::optional<double> order;
    double seconds = 0.0;
};

/// Fills `out` with the exact solution at time t.
using ExactSolution = std::function<void(double t, std::span<Complex> out)>;

ErrorReport error_report(const RunResult& run, const std::vector<FunctionalKind>& monitored,
                         const ExactSolution& exact = {});

}  // namespace tdsr
