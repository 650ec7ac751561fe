#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tdsr/field.hpp"
#include "tdsr/grid.hpp"
#include "tdsr/quadrature.hpp"
#include "tdsr/renormalization.hpp"

namespace tdsr {

enum class ModelKind { kdv, nls, allen_cahn };

enum class BoundaryKind {
    periodic,
    decaying,   // truncated to a periodic box, relies on tail decay
    neumann,    // Chebyshev, D * D0
    dirichlet,  // Chebyshev, homogenized with an affine lift
};

std::string_view model_name(ModelKind kind);
std::string_view boundary_name(BoundaryKind kind);

/// Equation and parameters.
///   kdv:        u_t = -alpha u u_x - eps^2 u_xxx
///   nls:        u_t = i Laplacian u + i |u|^2 u
///   allen_cahn: u_t = D u_xx + gamma (u - u^3)
/// For the Dirichlet Allen-Cahn problem the unknown is w = u - phi with phi the
/// affine function taking `left_value`, `right_value` at the interval ends.
struct ModelSpec {
    ModelKind kind = ModelKind::kdv;
    double alpha = 6.0;
    double epsilon = 1.0;
    double diffusion = 1.0;
    double gamma = 1.0;
    BoundaryKind boundary = BoundaryKind::periodic;
    double left_value = 0.0;
    double right_value = 0.0;

    bool complex_field() const { return kind == ModelKind::nls; }
    bool dissipative() const { return kind == ModelKind::allen_cahn; }
};

ModelSpec kdv_model(double alpha = 6.0, double epsilon = 1.0,
                    BoundaryKind boundary = BoundaryKind::decaying);
ModelSpec nls_model();
ModelSpec allen_cahn_model(double diffusion, double gamma, BoundaryKind boundary = BoundaryKind::neumann);

/// Dirichlet data u(left) = g_l, u(right) = g_r moved into the equation for
/// w = u - phi; w vanishes at both ends.
ModelSpec homogenize_dirichlet(ModelSpec model, double g_l, double g_r);

/// A model bound to a grid: nonlinear term, linear flow, functionals.
class Problem {
public:
    Problem(ModelSpec model, SpatialGrid grid);

    const ModelSpec& model() const noexcept { return model_; }
    const SpatialGrid& grid() const noexcept { return grid_; }
    std::size_t points() const { return grid_size(grid_); }
    bool real_field() const { return !model_.complex_field(); }

    /// N(u) at one time level. `u` and `out` must not alias.
    void nonlinear(std::span<const Complex> u, std::span<Complex> out) const;
    SpaceTimeField nonlinear(const SpaceTimeField& u) const;

    std::unique_ptr<LinearFlow> linear_flow(double dt) const;
    /// Fourier symbol of L (KdV, NLS) or its collocation matrix (Allen-Cahn);
    /// each throws for the other family.
    LinearSymbol linear_symbol() const;
    LinearMatrix linear_matrix() const;

    bool supports(FunctionalKind kind) const;
    /// The functional with this model's constants; throws validation errors
    /// for laws that do not belong to the model.
    Functional functional(FunctionalKind kind) const;
    /// Invariants reported in diagnostics output.
    std::vector<FunctionalKind> diagnostics() const;

    /// Affine lift on the nodes (empty unless the model is Dirichlet).
    const std::vector<double>& lift() const noexcept { return lift_; }
    DissipationModel dissipation() const;

private:
    ModelSpec model_;
    SpatialGrid grid_;
    std::vector<double> lift_;
};

/// 2 beta^2 sech^2(beta (x - 4 beta^2 t)), the alpha = 6, eps = 1 soliton.
double kdv_soliton_exact(double beta, double x, double t);

/// Sum of two solitons, the second centred at x0.
double kdv_two_soliton_initial(double beta1, double beta2, double x0, double x);

/// 0.5 - 0.5 tanh(xi / (2 sqrt 2 eps)), xi = x - 3 t / (sqrt 2 eps); solves
/// Allen-Cahn with D = 1, gamma = 1 / eps^2.
double ac_travelling_exact(double epsilon, double x, double t);

struct TownesOptions {
    double tolerance = 1e-10;
    int max_iterations = 2000;
    /// Directory for the binary cache and its text sidecar; no caching if empty.
    std::filesystem::path cache_dir;
};

struct TownesProfile {
    std::vector<double> values;  // row-major on the plane grid
    double residual = 0.0;       // max |Laplacian U + U^3 - lambda^2 U|
    int iterations = 0;
    bool from_cache = false;
};

/// Ground state of Laplacian U + U^3 = lambda^2 U by Petviashvili iteration
/// (stabilizing exponent 3/2).
TownesProfile townes_profile(double lambda, const PeriodicGrid& plane, const TownesOptions& options = {});

struct LocalErrors {
    std::vector<double> mass;      // E1(x)
    std::vector<double> momentum;  // E2(x)
};

/// KdV local mass and momentum balance residuals at the last of five levels,
/// time derivatives by the backward formula (25, -48, 36, -16, 3) / (12 dt).
LocalErrors local_conservation_errors(std::span<const std::span<const Complex>> levels, double dt,
                                      double alpha, double epsilon, const PeriodicGrid& grid);

}  // namespace tdsr
