#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdsr/field.hpp"
#include "tdsr/grid.hpp"

namespace tdsr {

enum class FunctionalKind {
    kdv_mass,
    kdv_momentum,
    kdv_hamiltonian,
    zk_q1,
    zk_q2,
    zk_q3,
    zk_q4,
    zk_q5,
    zk_q6,
    nls_power,
    nls_momentum,
    nls_hamiltonian,
    ac_l2,
};

std::string_view functional_name(FunctionalKind kind);
std::optional<FunctionalKind> parse_functional(std::string_view name);

/// A conserved or dissipated integral together with the model constants its
/// density depends on.
///   kdv_mass          u
///   kdv_momentum      u^2
///   kdv_hamiltonian   -(alpha/6) u^3 + (eps^2/2) u_x^2
///   zk_q1 .. zk_q6    the six Zabusky-Kruskal invariants (alpha = 1 form)
///   nls_power         |u|^2
///   nls_momentum      u conj(u_x)   (x-component)
///   nls_hamiltonian   -|u|^4/4 + |grad u|^2/2
///   ac_l2             u^2
struct Functional {
    FunctionalKind kind = FunctionalKind::kdv_momentum;
    double alpha = 6.0;
    double epsilon = 1.0;
};

Complex evaluate_functional(const Functional& functional, std::span<const Complex> u,
                            const SpatialGrid& grid);

/// Laws that can be imposed through the renormalization factors.
bool is_enforceable(FunctionalKind kind);
bool is_mass_law(FunctionalKind kind);
bool is_quadratic_law(FunctionalKind kind);

/// Q(sum_l R_l v_l) written as a polynomial in R = (R_1..R_n):
///   sum_a c1[a] R_a + sum_ab c2[a,b] R_a R_b + sum_abc c3[a,b,c] R_a R_b R_c
/// with symmetric, fully stored tensors.
struct LawPolynomial {
    std::size_t n = 0;
    std::vector<double> c1;
    std::vector<double> c2;
    std::vector<double> c3;

    explicit LawPolynomial(std::size_t n_factors = 0)
        : n(n_factors), c1(n_factors, 0.0), c2(n_factors * n_factors, 0.0),
          c3(n_factors * n_factors * n_factors, 0.0) {}

    double value(std::span<const double> r) const;
    void gradient(std::span<const double> r, std::span<double> grad) const;
    /// Sum of the absolute values of all monomials; scale for residual checks.
    double magnitude(std::span<const double> r) const;
    int degree() const;
};

LawPolynomial law_polynomial(const Functional& law, const std::vector<std::span<const Complex>>& v,
                             const SpatialGrid& grid);

struct RenormDiagnostics {
    /// Largest relative law residual over all levels (per law).
    std::vector<double> residual_max;
    std::vector<int> newton_iterations;  // per level, 0 for closed forms
    std::vector<int> selected_root;      // per level, index into the sorted real roots
    bool certified = true;
    double certificate_error = 0.0;
    bool root_flipped = false;
};

/// R_j(t_i) for every enforced law plus solver diagnostics.
struct RenormFactors {
    std::vector<std::vector<double>> factors;  // [law][level]
    RenormDiagnostics diagnostics;

    std::size_t laws() const { return factors.size(); }
    std::size_t levels() const { return factors.empty() ? 0 : factors.front().size(); }
};

struct RenormOptions {
    /// t = 0 selection certificate: ||R(0) v(.,0) - f||_inf <= rel * ||f||_inf.
    double selection_tolerance = 1e-8;
    double newton_tolerance = 1e-13;
    int newton_max_iterations = 50;
};

/// Closed forms for mass and quadratic laws, real cubic roots for the KdV
/// Hamiltonian. The root at t = 0 minimizes ||R v(.,0) - f||_inf; later
/// levels take the root nearest the previous level.
RenormFactors solve_single_law(const Functional& law, const SpaceTimeField& v, double target,
                               std::span<const Complex> pseudo_ic, const SpatialGrid& grid,
                               const RenormOptions& options = {});

/// Mass (v1 enters through A1, A2) and momentum enforced together; R2 is the
/// root of mu1 R2^2 + mu2 R2 + mu3 = 0 with the + sign of the discriminant.
RenormFactors solve_two_law_mass_momentum(const Functional& mass, const Functional& momentum,
                                          const SpaceTimeField& v1, const SpaceTimeField& v2,
                                          double mass_target, double momentum_target,
                                          std::span<const Complex> pseudo_ic_2, const SpatialGrid& grid,
                                          const RenormOptions& options = {});

/// Newton's method on the polynomial system, level by level. `initial` gives a
/// per-level starting point ([law][level]); when empty the previous level's
/// solution is used, all ones at t = 0.
RenormFactors solve_multi_law_newton(const std::vector<Functional>& laws,
                                     const std::vector<const SpaceTimeField*>& v,
                                     std::span<const double> targets,
                                     const std::vector<std::vector<double>>& initial,
                                     const SpatialGrid& grid, const RenormOptions& options = {});

/// Picks the solver for the law set: single law, the mass+momentum closed
/// form, or Newton.
RenormFactors renormalize(const std::vector<Functional>& laws, const std::vector<const SpaceTimeField*>& v,
                          std::span<const double> targets,
                          const std::vector<std::span<const Complex>>& pseudo_ics,
                          const std::vector<std::vector<double>>& previous, const SpatialGrid& grid,
                          const RenormOptions& options = {});

/// Allen-Cahn L2 dissipation: d/dt int w^2 = -2D int w_x^2 + 2 gamma int w (w+phi)
///                                         - 2 gamma int w (w+phi)^3,
/// phi the (optional) boundary lift; phi = 0 gives dp/dt = (-a + 2 gamma) p - b p^2.
struct DissipationModel {
    double diffusion = 1.0;
    double gamma = 1.0;
    std::vector<double> lift;
};

/// p(t_i) = r(t_i) R(t_i)^2 with r, a, b the moments of v.
struct DissipativeState {
    std::vector<double> p, r, a, b;
    std::vector<double> rate;               // g(p_i, t_i)
    std::vector<double> identity_residual;  // per step, relative
};

struct DissipativeRenorm {
    std::vector<double> factors;
    DissipativeState state;
};

/// Crank-Nicolson march of dp/dt = (-a + 2 gamma) p - b p^2 from given
/// coefficient series. Each step solves the quadratic for p_{i+1} exactly.
DissipativeState march_dissipation(std::span<const double> a, std::span<const double> b, double gamma,
                                   double p0, double dt);

/// Crank-Nicolson march of the rate equation for p; R = +sqrt(p / r).
DissipativeRenorm dissipative_renorm(const SpaceTimeField& v, const SpatialGrid& grid,
                                     const DissipationModel& model, double p0, double dt);

}  // namespace tdsr
