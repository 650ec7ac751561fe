#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tdsr/field.hpp"
#include "tdsr/grid.hpp"

namespace tdsr {

/// Fourier symbol of a constant-coefficient linear operator, one value per
/// spectral slot of the grid it was built for (units 1/time).
struct LinearSymbol {
    CVector values;
};

/// L = -eps^2 d^3/dx^3  ->  i eps^2 k^3.
LinearSymbol kdv_symbol(const PeriodicGrid& grid, double epsilon);
/// L = i Laplacian  ->  -i |k|^2 (any dimension).
LinearSymbol schrodinger_symbol(const PeriodicGrid& grid);

/// out = IFFT(exp(t * symbol) * FFT(in)). `in` and `out` may alias.
void apply_semigroup_symbol(const PeriodicGrid& grid, const LinearSymbol& symbol, double t,
                            std::span<const Complex> in, std::span<Complex> out);

enum class MatrixBoundary { neumann, dirichlet };

/// Dense collocation matrix of D * d^2/dx^2 with the boundary condition encoded.
///   neumann:   D * D0, D0 = D with first and last rows zeroed.
///   dirichlet: D^2 with boundary rows and columns zeroed (homogeneous data;
///              boundary nodes are held fixed).
struct LinearMatrix {
    Eigen::MatrixXd matrix;
    MatrixBoundary boundary = MatrixBoundary::neumann;

    Eigen::MatrixXd scaled(double dt) const { return dt * matrix; }
};

LinearMatrix diffusion_matrix(const ChebyshevGrid& grid, double diffusion, MatrixBoundary boundary);

struct ExpmOptions {
    /// Largest admissible 1-norm of the scaled matrix.
    double norm_cap = 1e12;
};

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& scaled, const ExpmOptions& options = {});

struct ContourCircle {
    double center = 0.0;
    double radius = 1.0;
};

/// Circle centred at the mean Gershgorin centre, radius `inflation` times the
/// smallest radius containing every Gershgorin disc.
ContourCircle gershgorin_circle(const Eigen::MatrixXd& a, double inflation = 1.1);

struct ContourOptions {
    int points = 64;
    int max_points = 4096;
    double tolerance = 1e-12;
    /// Overrides the Gershgorin circle; must still contain every disc.
    std::optional<ContourCircle> circle;
};

using ScalarFunction = std::function<Complex(Complex)>;

/// (1/2 pi i) \oint phi(zeta) (zeta I - A)^{-1} d zeta over a circle enclosing
/// spec(A), trapezoidal in the angle, doubling the node count until two
/// successive estimates agree. phi must satisfy phi(conj z) = conj phi(z).
Eigen::MatrixXd contour_phi_matrix(const ScalarFunction& phi, const Eigen::MatrixXd& scaled,
                                   const ContourOptions& options = {});

/// phi_0(A) = exp(A), ..., phi_max_order(A) by Taylor expansion of the scaled
/// matrix followed by the doubling identities
///   phi_k(2A) = 2^-k [ phi_0(A) phi_k(A) + sum_{j=1..k} phi_j(A) / (k-j)! ].
std::vector<Eigen::MatrixXd> phi_functions(const Eigen::MatrixXd& scaled, int max_order,
                                           const ExpmOptions& options = {});

}  // namespace tdsr
