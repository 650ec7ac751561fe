#include "tdsr/renormalization.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "tdsr/error.hpp"

namespace tdsr {

namespace {

constexpr std::array<std::pair<FunctionalKind, std::string_view>, 13> kNames{{
    {FunctionalKind::kdv_mass, "kdv_mass"},
    {FunctionalKind::kdv_momentum, "kdv_momentum"},
    {FunctionalKind::kdv_hamiltonian, "kdv_hamiltonian"},
    {FunctionalKind::zk_q1, "zk_q1"},
    {FunctionalKind::zk_q2, "zk_q2"},
    {FunctionalKind::zk_q3, "zk_q3"},
    {FunctionalKind::zk_q4, "zk_q4"},
    {FunctionalKind::zk_q5, "zk_q5"},
    {FunctionalKind::zk_q6, "zk_q6"},
    {FunctionalKind::nls_power, "nls_power"},
    {FunctionalKind::nls_momentum, "nls_momentum"},
    {FunctionalKind::nls_hamiltonian, "nls_hamiltonian"},
    {FunctionalKind::ac_l2, "ac_l2"},
}};

CVector derivative(const SpatialGrid& grid, std::span<const Complex> u, int order, int axis = 0) {
    CVector out(u.size());
    differentiate(grid, u, out, order, axis);
    return out;
}

double real_integral(const SpatialGrid& grid, std::span<const Complex> f) {
    return integrate(grid, f).real();
}

bool is_real_quadratic(FunctionalKind kind) {
    return kind == FunctionalKind::kdv_momentum || kind == FunctionalKind::zk_q2 ||
           kind == FunctionalKind::ac_l2;
}

bool is_cubic_law(FunctionalKind kind) {
    return kind == FunctionalKind::kdv_hamiltonian || kind == FunctionalKind::zk_q3;
}

double cubic_weight(const Functional& law) {
    return law.kind == FunctionalKind::zk_q3 ? -1.0 / 6.0 : -law.alpha / 6.0;
}

// Real roots of sum_k coeffs[k] x^k (lowest order first), polished by Newton.
std::vector<double> real_roots(std::vector<double> coeffs) {
    double scale = 0.0;
    for (double c : coeffs) scale = std::max(scale, std::abs(c));
    while (coeffs.size() > 1 && std::abs(coeffs.back()) <= 1e-14 * scale) coeffs.pop_back();
    const int deg = static_cast<int>(coeffs.size()) - 1;
    if (deg < 1) return {};
    std::vector<double> roots;
    if (deg == 1) {
        roots.push_back(-coeffs[0] / coeffs[1]);
    } else {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
        for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
        for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs[i] / coeffs[deg];
        Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
        for (int i = 0; i < deg; ++i) {
            const auto z = es.eigenvalues()[i];
            if (std::abs(z.imag()) <= 1e-10 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
        }
    }
    auto eval = [&](double x, double& dp) {
        double p = 0.0;
        dp = 0.0;
        for (int k = deg; k >= 0; --k) {
            dp = dp * x + p;
            p = p * x + coeffs[k];
        }
        return p;
    };
    for (double& x : roots) {
        for (int it = 0; it < 6; ++it) {
            double dp = 0.0;
            const double p = eval(x, dp);
            if (dp == 0.0) break;
            const double next = x - p / dp;
            double dq = 0.0;
            if (!std::isfinite(next) || std::abs(eval(next, dq)) >= std::abs(p)) break;
            x = next;
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

double certificate(std::span<const Complex> v0, double r, std::span<const Complex> f) {
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(r * v0[i] - f[i]));
    return err;
}

void check_factor(double r, const char* what, std::size_t level) {
    if (!std::isfinite(r) || r == 0.0) {
        std::ostringstream os;
        os << what << ": renormalization factor " << r << " at level " << level;
        throw Error(ErrorKind::singular, os.str());
    }
}

double relative_residual(const LawPolynomial& poly, std::span<const double> r, double target) {
    const double scale = std::max(std::abs(target), std::numeric_limits<double>::min());
    return std::abs(poly.value(r) - target) / scale;
}

}  // namespace

std::string_view functional_name(FunctionalKind kind) {
    for (const auto& [k, name] : kNames)
        if (k == kind) return name;
    return "unknown";
}

std::optional<FunctionalKind> parse_functional(std::string_view name) {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    return std::nullopt;
}

bool is_enforceable(FunctionalKind kind) {
    return is_mass_law(kind) || is_quadratic_law(kind) || is_cubic_law(kind);
}

bool is_mass_law(FunctionalKind kind) {
    return kind == FunctionalKind::kdv_mass || kind == FunctionalKind::zk_q1;
}

bool is_quadratic_law(FunctionalKind kind) {
    return is_real_quadratic(kind) || kind == FunctionalKind::nls_power;
}

Complex evaluate_functional(const Functional& functional, std::span<const Complex> u,
                            const SpatialGrid& grid) {
    if (u.size() != grid_size(grid)) throw Error(ErrorKind::dimension, "functional: field size mismatch");
    const double e2 = functional.epsilon * functional.epsilon;
    const double e4 = e2 * e2, e6 = e4 * e2, e8 = e4 * e4;
    CVector density(u.size());
    auto fill = [&](auto&& f) {
        for (std::size_t i = 0; i < u.size(); ++i) density[i] = f(i);
    };

    switch (functional.kind) {
        case FunctionalKind::kdv_mass:
        case FunctionalKind::zk_q1:
            return integrate(grid, u);
        case FunctionalKind::kdv_momentum:
        case FunctionalKind::zk_q2:
        case FunctionalKind::ac_l2:
            fill([&](std::size_t i) { return u[i] * u[i]; });
            break;
        case FunctionalKind::kdv_hamiltonian:
        case FunctionalKind::zk_q3: {
            const double c = cubic_weight(functional);
            const auto ux = derivative(grid, u, 1);
            fill([&](std::size_t i) { return c * u[i] * u[i] * u[i] + 0.5 * e2 * ux[i] * ux[i]; });
            break;
        }
        case FunctionalKind::zk_q4: {
            const auto ux = derivative(grid, u, 1);
            const auto uxx = derivative(grid, u, 2);
            fill([&](std::size_t i) {
                const Complex v = u[i];
                return std::pow(v, 4) / 4.0 - 3.0 * e2 * v * ux[i] * ux[i] +
                       9.0 * e4 * uxx[i] * uxx[i] / 5.0;
            });
            break;
        }
        case FunctionalKind::zk_q5: {
            const auto ux = derivative(grid, u, 1);
            const auto uxx = derivative(grid, u, 2);
            const auto uxxx = derivative(grid, u, 3);
            fill([&](std::size_t i) {
                const Complex v = u[i];
                return std::pow(v, 5) / 5.0 - 6.0 * e2 * v * v * ux[i] * ux[i] +
                       36.0 * e4 * v * uxx[i] * uxx[i] / 5.0 - 108.0 * e6 * uxxx[i] * uxxx[i] / 35.0;
            });
            break;
        }
        case FunctionalKind::zk_q6: {
            const auto ux = derivative(grid, u, 1);
            const auto uxx = derivative(grid, u, 2);
            const auto uxxx = derivative(grid, u, 3);
            const auto uxxxx = derivative(grid, u, 4);
            fill([&](std::size_t i) {
                const Complex v = u[i];
                return std::pow(v, 6) / 6.0 - 10.0 * e2 * std::pow(v, 3) * ux[i] * ux[i] +
                       18.0 * e4 * v * v * uxx[i] * uxx[i] - 5.0 * e4 * std::pow(ux[i], 4) -
                       108.0 * e6 * v * uxxx[i] * uxxx[i] / 7.0 + 120.0 * e6 * std::pow(uxx[i], 3) / 7.0 +
                       36.0 * e8 * uxxxx[i] * uxxxx[i] / 7.0;
            });
            break;
        }
        case FunctionalKind::nls_power:
            fill([&](std::size_t i) { return Complex(std::norm(u[i]), 0.0); });
            break;
        case FunctionalKind::nls_momentum: {
            const auto ux = derivative(grid, u, 1, 0);
            fill([&](std::size_t i) { return u[i] * std::conj(ux[i]); });
            break;
        }
        case FunctionalKind::nls_hamiltonian: {
            std::vector<double> grad2(u.size(), 0.0);
            const int dims = std::holds_alternative<PeriodicGrid>(grid)
                                 ? std::get<PeriodicGrid>(grid).dimension()
                                 : 1;
            for (int axis = 0; axis < dims; ++axis) {
                const auto d = derivative(grid, u, 1, axis);
                for (std::size_t i = 0; i < u.size(); ++i) grad2[i] += std::norm(d[i]);
            }
            fill([&](std::size_t i) {
                const double m = std::norm(u[i]);
                return Complex(-0.25 * m * m + 0.5 * grad2[i], 0.0);
            });
            break;
        }
    }
    return integrate(grid, density);
}

double LawPolynomial::value(std::span<const double> r) const {
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        s += c1[a] * r[a];
        for (std::size_t b = 0; b < n; ++b) {
            s += c2[a * n + b] * r[a] * r[b];
            for (std::size_t c = 0; c < n; ++c) s += c3[(a * n + b) * n + c] * r[a] * r[b] * r[c];
        }
    }
    return s;
}

void LawPolynomial::gradient(std::span<const double> r, std::span<double> grad) const {
    for (std::size_t a = 0; a < n; ++a) {
        double g = c1[a];
        for (std::size_t b = 0; b < n; ++b) {
            g += 2.0 * c2[a * n + b] * r[b];
            for (std::size_t c = 0; c < n; ++c) g += 3.0 * c3[(a * n + b) * n + c] * r[b] * r[c];
        }
        grad[a] = g;
    }
}

double LawPolynomial::magnitude(std::span<const double> r) const {
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        s += std::abs(c1[a] * r[a]);
        for (std::size_t b = 0; b < n; ++b) {
            s += std::abs(c2[a * n + b] * r[a] * r[b]);
            for (std::size_t c = 0; c < n; ++c) s += std::abs(c3[(a * n + b) * n + c] * r[a] * r[b] * r[c]);
        }
    }
    return s;
}

int LawPolynomial::degree() const {
    auto nonzero = [](const std::vector<double>& c) {
        return std::any_of(c.begin(), c.end(), [](double x) { return x != 0.0; });
    };
    if (nonzero(c3)) return 3;
    if (nonzero(c2)) return 2;
    return nonzero(c1) ? 1 : 0;
}

LawPolynomial law_polynomial(const Functional& law, const std::vector<std::span<const Complex>>& v,
                             const SpatialGrid& grid) {
    if (!is_enforceable(law.kind))
        throw Error(ErrorKind::config,
                    std::string("law polynomial: functional cannot be enforced: ") +
                        std::string(functional_name(law.kind)));
    const std::size_t n = v.size();
    const std::size_t points = grid_size(grid);
    LawPolynomial poly(n);
    CVector work(points);

    if (is_mass_law(law.kind)) {
        for (std::size_t a = 0; a < n; ++a) poly.c1[a] = real_integral(grid, v[a]);
        return poly;
    }

    const bool hermitian = law.kind == FunctionalKind::nls_power;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            for (std::size_t i = 0; i < points; ++i)
                work[i] = hermitian ? v[a][i] * std::conj(v[b][i]) : v[a][i] * v[b][i];
            const double m = real_integral(grid, work);
            poly.c2[a * n + b] = poly.c2[b * n + a] = m;
        }
    }
    if (is_quadratic_law(law.kind)) return poly;

    // Cubic (Hamiltonian) law: c3 from triple products, c2 from the gradient term.
    const double e2 = law.epsilon * law.epsilon;
    std::vector<CVector> dv(n);
    for (std::size_t a = 0; a < n; ++a) dv[a] = derivative(grid, v[a], 1);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            for (std::size_t i = 0; i < points; ++i) work[i] = dv[a][i] * dv[b][i];
            const double m = 0.5 * e2 * real_integral(grid, work);
            poly.c2[a * n + b] = poly.c2[b * n + a] = m;
        }
    }
    const double w = cubic_weight(law);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b)
            for (std::size_t c = b; c < n; ++c) {
                for (std::size_t i = 0; i < points; ++i) work[i] = v[a][i] * v[b][i] * v[c][i];
                const double m = w * real_integral(grid, work);
                const std::array<std::size_t, 3> idx{a, b, c};
                std::array<std::size_t, 3> p = idx;
                std::sort(p.begin(), p.end());
                do {
                    poly.c3[(p[0] * n + p[1]) * n + p[2]] = m;
                } while (std::next_permutation(p.begin(), p.end()));
            }
    return poly;
}

RenormFactors solve_single_law(const Functional& law, const SpaceTimeField& v, double target,
                               std::span<const Complex> pseudo_ic, const SpatialGrid& grid,
                               const RenormOptions& options) {
    if (!is_enforceable(law.kind))
        throw Error(ErrorKind::config, std::string("single law: functional cannot be enforced: ") +
                                           std::string(functional_name(law.kind)));
    const std::size_t levels = v.levels();
    RenormFactors out;
    out.factors.assign(1, std::vector<double>(levels, 0.0));
    out.diagnostics.residual_max.assign(1, 0.0);
    out.diagnostics.newton_iterations.assign(levels, 0);
    out.diagnostics.selected_root.assign(levels, 0);
    auto& r = out.factors[0];

    for (std::size_t i = 0; i < levels; ++i) {
        const auto poly = law_polynomial(law, {v.level(i)}, grid);
        if (is_mass_law(law.kind)) {
            if (poly.c1[0] == 0.0) throw Error(ErrorKind::singular, "mass law: integral of v vanishes");
            r[i] = target / poly.c1[0];
        } else if (is_quadratic_law(law.kind)) {
            const double ratio = target / poly.c2[0];
            if (!(ratio > 0.0)) {
                std::ostringstream os;
                os << "quadratic law: C / int v^2 = " << ratio << " at level " << i;
                throw Error(ErrorKind::sign, os.str());
            }
            r[i] = std::sqrt(ratio);
        } else {
            const std::vector<double> coeffs{-target, poly.c1[0], poly.c2[0], poly.c3[0]};
            auto roots = real_roots(coeffs);
            roots.erase(std::remove(roots.begin(), roots.end(), 0.0), roots.end());
            if (roots.empty()) {
                std::ostringstream os;
                os << "cubic law: no real root at level " << i << " for " << poly.c3[0] << " R^3 + "
                   << poly.c2[0] << " R^2 = " << target;
                throw Error(ErrorKind::root_failure, os.str());
            }
            std::size_t best = 0;
            if (i == 0) {
                double best_err = std::numeric_limits<double>::infinity();
                for (std::size_t k = 0; k < roots.size(); ++k) {
                    const double e = certificate(v.level(0), roots[k], pseudo_ic);
                    if (e < best_err) best_err = e, best = k;
                }
            } else {
                for (std::size_t k = 1; k < roots.size(); ++k)
                    if (std::abs(roots[k] - r[i - 1]) < std::abs(roots[best] - r[i - 1])) best = k;
            }
            r[i] = roots[best];
            out.diagnostics.selected_root[i] = static_cast<int>(best);
        }
        check_factor(r[i], "single law", i);
        const double rr[1] = {r[i]};
        out.diagnostics.residual_max[0] =
            std::max(out.diagnostics.residual_max[0], relative_residual(poly, rr, target));
    }
    if (!pseudo_ic.empty() && levels > 0) {
        const double err = certificate(v.level(0), r[0], pseudo_ic);
        out.diagnostics.certificate_error = err;
        out.diagnostics.certified = err <= options.selection_tolerance * max_abs(pseudo_ic);
    }
    return out;
}

RenormFactors solve_two_law_mass_momentum(const Functional& mass, const Functional& momentum,
                                          const SpaceTimeField& v1, const SpaceTimeField& v2,
                                          double mass_target, double momentum_target,
                                          std::span<const Complex> pseudo_ic_2, const SpatialGrid& grid,
                                          const RenormOptions& options) {
    if (!is_mass_law(mass.kind) || !is_real_quadratic(momentum.kind))
        throw Error(ErrorKind::config, "two-law closed form needs a mass and a momentum law");
    const std::size_t levels = v1.levels();
    RenormFactors out;
    out.factors.assign(2, std::vector<double>(levels, 0.0));
    out.diagnostics.residual_max.assign(2, 0.0);
    out.diagnostics.newton_iterations.assign(levels, 0);
    out.diagnostics.selected_root.assign(levels, 0);

    const double c1 = mass_target, c2 = momentum_target;
    std::vector<LawPolynomial> pm(levels), pp(levels);
    auto roots_at = [&](std::size_t i, double sign, double& r1, double& r2) {
        const double a1 = pm[i].c1[0], a2 = pm[i].c1[1];
        const double a3 = pp[i].c2[0], a4 = pp[i].c2[3], a5 = pp[i].c2[1];
        if (a1 == 0.0) throw Error(ErrorKind::singular, "two-law: integral of v1 vanishes");
        const double mu1 = a3 * a2 * a2 + a4 * a1 * a1 - 2.0 * a1 * a2 * a5;
        const double mu2 = 2.0 * a1 * a5 * c1 - 2.0 * a2 * a3 * c1;
        const double mu3 = a3 * c1 * c1 - c2 * a1 * a1;
        const double disc = mu2 * mu2 - 4.0 * mu1 * mu3;
        if (disc < 0.0 || mu1 == 0.0) {
            std::ostringstream os;
            os << "two-law: no real root at level " << i << " (mu = " << mu1 << ", " << mu2 << ", " << mu3
               << ")";
            throw Error(ErrorKind::root_failure, os.str());
        }
        r2 = (-mu2 + sign * std::sqrt(disc)) / (2.0 * mu1);
        r1 = (c1 - a2 * r2) / a1;
    };

    for (std::size_t i = 0; i < levels; ++i) {
        pm[i] = law_polynomial(mass, {v1.level(i), v2.level(i)}, grid);
        pp[i] = law_polynomial(momentum, {v1.level(i), v2.level(i)}, grid);
    }

    double sign = 1.0;
    if (levels > 0 && !pseudo_ic_2.empty()) {
        const double tol = options.selection_tolerance * max_abs(pseudo_ic_2);
        double r1 = 0, r2 = 0;
        roots_at(0, 1.0, r1, r2);
        double err = certificate(v2.level(0), r2, pseudo_ic_2);
        if (err > tol) {
            double s1 = 0, s2 = 0;
            roots_at(0, -1.0, s1, s2);
            const double other = certificate(v2.level(0), s2, pseudo_ic_2);
            if (other <= tol) {
                sign = -1.0;
                err = other;
                out.diagnostics.root_flipped = true;
            }
        }
        out.diagnostics.certificate_error = err;
        out.diagnostics.certified = err <= tol;
    }

    for (std::size_t i = 0; i < levels; ++i) {
        double r[2];
        roots_at(i, sign, r[0], r[1]);
        // One Newton correction on the pair removes cancellation in the closed form.
        for (int it = 0; it < 2; ++it) {
            const double f0 = pm[i].value(r) - c1, f1 = pp[i].value(r) - c2;
            double g0[2], g1[2];
            pm[i].gradient(r, g0);
            pp[i].gradient(r, g1);
            const double det = g0[0] * g1[1] - g0[1] * g1[0];
            if (det == 0.0 || !std::isfinite(det)) break;
            const double d0 = (f0 * g1[1] - f1 * g0[1]) / det;
            const double d1 = (g0[0] * f1 - g1[0] * f0) / det;
            const double n0 = r[0] - d0, n1 = r[1] - d1;
            const double nr[2] = {n0, n1};
            if (std::abs(pm[i].value(nr) - c1) + std::abs(pp[i].value(nr) - c2) >= std::abs(f0) + std::abs(f1))
                break;
            r[0] = n0, r[1] = n1;
        }
        for (int j = 0; j < 2; ++j) {
            check_factor(r[j], "two-law", i);
            out.factors[j][i] = r[j];
        }
        out.diagnostics.selected_root[i] = sign > 0 ? 0 : 1;
        out.diagnostics.residual_max[0] =
            std::max(out.diagnostics.residual_max[0], relative_residual(pm[i], r, c1));
        out.diagnostics.residual_max[1] =
            std::max(out.diagnostics.residual_max[1], relative_residual(pp[i], r, c2));
    }
    return out;
}

RenormFactors solve_multi_law_newton(const std::vector<Functional>& laws,
                                     const std::vector<const SpaceTimeField*>& v,
                                     std::span<const double> targets,
                                     const std::vector<std::vector<double>>& initial,
                                     const SpatialGrid& grid, const RenormOptions& options) {
    const std::size_t n = laws.size();
    if (n == 0 || v.size() != n || targets.size() != n)
        throw Error(ErrorKind::dimension, "newton: laws, components and targets must match");
    const std::size_t levels = v[0]->levels();
    RenormFactors out;
    out.factors.assign(n, std::vector<double>(levels, 0.0));
    out.diagnostics.residual_max.assign(n, 0.0);
    out.diagnostics.newton_iterations.assign(levels, 0);
    out.diagnostics.selected_root.assign(levels, 0);

    std::vector<double> r(n, 1.0), grad(n);
    std::vector<LawPolynomial> polys(n);
    Eigen::MatrixXd jac(n, n);
    Eigen::VectorXd res(n);

    for (std::size_t i = 0; i < levels; ++i) {
        std::vector<std::span<const Complex>> comps(n);
        for (std::size_t a = 0; a < n; ++a) comps[a] = v[a]->level(i);
        for (std::size_t m = 0; m < n; ++m) polys[m] = law_polynomial(laws[m], comps, grid);

        if (i == 0) {
            if (!initial.empty() && initial.size() == n && !initial[0].empty())
                for (std::size_t a = 0; a < n; ++a) r[a] = initial[a][0];
            else
                std::fill(r.begin(), r.end(), 1.0);
        }

        auto scaled_residual = [&]() {
            double worst = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                res[m] = polys[m].value(r) - targets[m];
                const double scale = std::max(std::abs(targets[m]), polys[m].magnitude(r));
                worst = std::max(worst, std::abs(res[m]) / std::max(scale, std::numeric_limits<double>::min()));
            }
            return worst;
        };

        std::vector<double> history{scaled_residual()};
        int iterations = 0;
        int stalled = 0;
        bool deficient = false;
        while (history.back() > options.newton_tolerance) {
            if (iterations >= options.newton_max_iterations || stalled >= 3) {
                if (history.back() <= 1e3 * options.newton_tolerance && stalled >= 3) break;
                std::ostringstream os;
                os << "newton: no convergence at level " << i
                   << (deficient ? " (rank-deficient jacobian)" : "") << "; residuals";
                for (double h : history) os << ' ' << h;
                throw Error(deficient ? ErrorKind::singular : ErrorKind::newton_failure, os.str());
            }
            for (std::size_t m = 0; m < n; ++m) {
                polys[m].gradient(r, grad);
                for (std::size_t a = 0; a < n; ++a) jac(m, a) = grad[a];
            }
            // Proportional components (e.g. equal-shape pseudo-ICs at t = 0)
            // leave a consistent but rank-deficient system: take the
            // minimum-norm step there.
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jac);
            cod.setThreshold(1e-12);
            if (cod.rank() == 0) {
                std::ostringstream os;
                os << "newton: zero jacobian at level " << i;
                throw Error(ErrorKind::singular, os.str());
            }
            deficient = deficient || cod.rank() < static_cast<Eigen::Index>(n);
            const Eigen::VectorXd step = cod.solve(res);
            const std::vector<double> base = r;
            const double current = history.back();
            double lambda = 1.0, trial = 0.0;
            for (int halving = 0; halving < 8; ++halving, lambda *= 0.5) {
                for (std::size_t a = 0; a < n; ++a) r[a] = base[a] - lambda * step[a];
                trial = scaled_residual();
                if (trial < current) break;
            }
            ++iterations;
            const double best = *std::min_element(history.begin(), history.end());
            history.push_back(trial);
            stalled = history.back() < best ? 0 : stalled + 1;
        }
        for (std::size_t a = 0; a < n; ++a) {
            check_factor(r[a], "newton", i);
            out.factors[a][i] = r[a];
        }
        out.diagnostics.newton_iterations[i] = iterations;
        for (std::size_t m = 0; m < n; ++m)
            out.diagnostics.residual_max[m] =
                std::max(out.diagnostics.residual_max[m], relative_residual(polys[m], r, targets[m]));
    }
    return out;
}

RenormFactors renormalize(const std::vector<Functional>& laws, const std::vector<const SpaceTimeField*>& v,
                          std::span<const double> targets,
                          const std::vector<std::span<const Complex>>& pseudo_ics,
                          const std::vector<std::vector<double>>& previous, const SpatialGrid& grid,
                          const RenormOptions& options) {
    const std::size_t n = laws.size();
    if (n == 0 || v.size() != n || targets.size() != n)
        throw Error(ErrorKind::dimension, "renormalize: laws, components and targets must match");
    auto ic = [&](std::size_t j) {
        return j < pseudo_ics.size() ? pseudo_ics[j] : std::span<const Complex>{};
    };
    if (n == 1) return solve_single_law(laws[0], *v[0], targets[0], ic(0), grid, options);
    if (n == 2) {
        for (std::size_t m = 0; m < 2; ++m) {
            const std::size_t o = 1 - m;
            if (is_mass_law(laws[m].kind) && is_real_quadratic(laws[o].kind))
                return solve_two_law_mass_momentum(laws[m], laws[o], *v[0], *v[1], targets[m], targets[o],
                                                   ic(1), grid, options);
        }
    }
    return solve_multi_law_newton(laws, v, targets, previous, grid, options);
}

DissipativeState march_dissipation(std::span<const double> a, std::span<const double> b, double gamma,
                                   double p0, double dt) {
    const std::size_t levels = a.size();
    if (b.size() != levels || levels == 0) throw Error(ErrorKind::dimension, "dissipation: coefficient series");
    if (!(p0 > 0.0)) throw Error(ErrorKind::positivity, "dissipation: p0 must be positive");
    DissipativeState s;
    s.a.assign(a.begin(), a.end());
    s.b.assign(b.begin(), b.end());
    s.p.assign(levels, 0.0);
    s.rate.assign(levels, 0.0);
    s.identity_residual.assign(levels > 0 ? levels - 1 : 0, 0.0);
    auto g = [&](double p, std::size_t i) { return (-a[i] + 2.0 * gamma) * p - b[i] * p * p; };

    s.p[0] = p0;
    s.rate[0] = g(p0, 0);
    for (std::size_t i = 0; i + 1 < levels; ++i) {
        const double h = 0.5 * dt;
        const double qa = h * b[i + 1];
        const double qb = 1.0 - h * (-a[i + 1] + 2.0 * gamma);
        const double rhs = s.p[i] + h * s.rate[i];
        double p = 0.0;
        if (qa == 0.0) {
            p = rhs / qb;
        } else {
            const double disc = qb * qb + 4.0 * qa * rhs;
            if (disc < 0.0) throw Error(ErrorKind::positivity, "dissipation: no real Crank-Nicolson root");
            const double sq = std::sqrt(disc);
            p = qb > 0.0 ? 2.0 * rhs / (qb + sq) : (-qb + sq) / (2.0 * qa);
        }
        if (!(p > 0.0) || !std::isfinite(p)) {
            std::ostringstream os;
            os << "dissipation: p = " << p << " at level " << i + 1;
            throw Error(ErrorKind::positivity, os.str());
        }
        s.p[i + 1] = p;
        s.rate[i + 1] = g(p, i + 1);
        const double lhs = (s.p[i + 1] - s.p[i]) / dt;
        const double mid = 0.5 * (s.rate[i] + s.rate[i + 1]);
        const double scale = std::max({std::abs(s.p[i]) / dt, std::abs(s.rate[i]), std::abs(s.rate[i + 1])});
        s.identity_residual[i] = std::abs(lhs - mid) / scale;
    }
    return s;
}

DissipativeRenorm dissipative_renorm(const SpaceTimeField& v, const SpatialGrid& grid,
                                     const DissipationModel& model, double p0, double dt) {
    const std::size_t levels = v.levels(), points = v.points();
    if (points != grid_size(grid)) throw Error(ErrorKind::dimension, "dissipation: field size mismatch");
    const bool lifted = !model.lift.empty();
    if (lifted && model.lift.size() != points) throw Error(ErrorKind::dimension, "dissipation: lift size");
    const double D = model.diffusion, gam = model.gamma;

    std::vector<double> r(levels), a(levels), b(levels);
    std::vector<std::array<double, 4>> k(levels);
    CVector work(points), vx(points);
    for (std::size_t i = 0; i < levels; ++i) {
        const auto vi = v.level(i);
        differentiate(grid, vi, vx, 1);
        auto moment = [&](auto&& f) {
            for (std::size_t j = 0; j < points; ++j) work[j] = f(j);
            return real_integral(grid, work);
        };
        r[i] = moment([&](std::size_t j) { return vi[j] * vi[j]; });
        const double grad2 = moment([&](std::size_t j) { return vx[j] * vx[j]; });
        const double quart = moment([&](std::size_t j) { return std::pow(vi[j], 4); });
        if (!(r[i] > 0.0)) throw Error(ErrorKind::positivity, "dissipation: int v^2 must be positive");
        a[i] = 2.0 * D * grad2 / r[i];
        b[i] = 2.0 * gam * quart / (r[i] * r[i]);
        if (lifted) {
            const auto& phi = model.lift;
            const double vphi = moment([&](std::size_t j) { return vi[j] * phi[j]; });
            const double vphi3 = moment([&](std::size_t j) { return vi[j] * std::pow(phi[j], 3); });
            const double v2phi2 = moment([&](std::size_t j) { return vi[j] * vi[j] * phi[j] * phi[j]; });
            const double v3phi = moment([&](std::size_t j) { return std::pow(vi[j], 3) * phi[j]; });
            k[i] = {2.0 * gam * (vphi - vphi3), -2.0 * D * grad2 + 2.0 * gam * r[i] - 6.0 * gam * v2phi2,
                    -6.0 * gam * v3phi, -2.0 * gam * quart};
        }
    }

    DissipativeRenorm out;
    if (!lifted) {
        out.state = march_dissipation(a, b, gam, p0, dt);
        out.state.r = r;
    } else {
        // With a boundary lift the rate is a quartic polynomial in R rather than
        // a quadratic in p; each Crank-Nicolson step is solved by Newton in R.
        auto& s = out.state;
        s.r = r, s.a = a, s.b = b;
        s.p.assign(levels, 0.0);
        s.rate.assign(levels, 0.0);
        s.identity_residual.assign(levels > 0 ? levels - 1 : 0, 0.0);
        auto rate = [&](double R, std::size_t i) {
            return R * (k[i][0] + R * (k[i][1] + R * (k[i][2] + R * k[i][3])));
        };
        auto drate = [&](double R, std::size_t i) {
            return k[i][0] + R * (2.0 * k[i][1] + R * (3.0 * k[i][2] + 4.0 * R * k[i][3]));
        };
        if (!(p0 > 0.0)) throw Error(ErrorKind::positivity, "dissipation: p0 must be positive");
        double R = std::sqrt(p0 / r[0]);
        s.p[0] = p0;
        s.rate[0] = rate(R, 0);
        for (std::size_t i = 0; i + 1 < levels; ++i) {
            const double rhs = s.p[i] + 0.5 * dt * s.rate[i];
            double x = R;
            bool done = false;
            for (int it = 0; it < 50 && !done; ++it) {
                const double f = r[i + 1] * x * x - 0.5 * dt * rate(x, i + 1) - rhs;
                const double df = 2.0 * r[i + 1] * x - 0.5 * dt * drate(x, i + 1);
                if (df == 0.0) break;
                const double step = f / df;
                x -= step;
                done = std::abs(step) <= 1e-15 * std::abs(x);
            }
            if (!(x > 0.0) || !std::isfinite(x)) {
                std::ostringstream os;
                os << "dissipation: nonpositive factor " << x << " at level " << i + 1;
                throw Error(ErrorKind::positivity, os.str());
            }
            R = x;
            s.p[i + 1] = r[i + 1] * R * R;
            s.rate[i + 1] = rate(R, i + 1);
            const double lhs = (s.p[i + 1] - s.p[i]) / dt;
            const double mid = 0.5 * (s.rate[i] + s.rate[i + 1]);
            const double scale =
                std::max({std::abs(s.p[i]) / dt, std::abs(s.rate[i]), std::abs(s.rate[i + 1])});
            s.identity_residual[i] = std::abs(lhs - mid) / scale;
        }
    }
    out.factors.resize(levels);
    for (std::size_t i = 0; i < levels; ++i) {
        out.factors[i] = std::sqrt(out.state.p[i] / r[i]);
        check_factor(out.factors[i], "dissipation", i);
    }
    return out;
}

}  // namespace tdsr
