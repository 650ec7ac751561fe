#include "tdsr/reference.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tdsr/error.hpp"
#include "tdsr/propagator.hpp"

namespace tdsr {

namespace {

struct Stepper {
    std::size_t steps = 0;
    double dt = 0.0;
};

Stepper plan_steps(double dt, double t_end) {
    if (!(dt > 0.0) || !(t_end > 0.0)) throw Error(ErrorKind::config, "reference: dt and T must be positive");
    const double steps = t_end / dt;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * steps || rounded < 1)
        throw Error(ErrorKind::config, "reference: T must be a multiple of dt");
    return {static_cast<std::size_t>(rounded), dt};
}

void guard(std::span<const Complex> u, double threshold, std::size_t step, double t) {
    double peak = 0.0;
    bool finite = true;
    for (const auto& z : u) {
        finite = finite && std::isfinite(z.real()) && std::isfinite(z.imag());
        peak = std::max(peak, std::abs(z));
    }
    if (!finite || peak > threshold) {
        std::ostringstream os;
        os << "reference integrator blew up at step " << step << " (t = " << t << ", max |u| = " << peak << ")";
        throw Error(ErrorKind::instability, os.str());
    }
}

Complex etd_f1(Complex z) { return (-4.0 - z + std::exp(z) * (4.0 - 3.0 * z + z * z)) / (z * z * z); }
Complex etd_f2(Complex z) { return (2.0 + z + std::exp(z) * (z - 2.0)) / (z * z * z); }
Complex etd_f3(Complex z) { return (-4.0 - 3.0 * z - z * z + std::exp(z) * (4.0 - z)) / (z * z * z); }

ReferenceSolution run_symbol(const Problem& problem, std::span<const Complex> u0, const Stepper& s,
                             const ReferenceOptions& options) {
    const auto& grid = std::get<PeriodicGrid>(problem.grid());
    const auto symbol = problem.linear_symbol();
    const std::size_t n = grid.size();
    const bool real = problem.real_field();
    const double h = s.dt;

    CVector e(n), e2(n), q(n), f1(n), f2(n), f3(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Complex z = h * symbol.values[k];
        e[k] = std::exp(z);
        e2[k] = std::exp(0.5 * z);
        q[k] = 0.5 * h * stabilized(phi1_closed, 0.5 * z, options.contour);
        f1[k] = h * stabilized(etd_f1, z, options.contour);
        f2[k] = h * stabilized(etd_f2, z, options.contour);
        f3[k] = h * stabilized(etd_f3, z, options.contour);
    }

    CVector u(u0.begin(), u0.end()), u_hat(n), work(n), field(n);
    CVector nu(n), na(n), nb(n), nc(n), a_hat(n), b_hat(n), c_hat(n);
    auto transformed_nonlinear = [&](std::span<const Complex> spectrum, CVector& out) {
        grid.inverse(spectrum, field);
        if (real) drop_imaginary(field);
        problem.nonlinear(field, work);
        grid.forward(work, out);
    };

    ReferenceSolution out;
    out.times.push_back(0.0);
    out.u.push_back(u);
    grid.forward(u, u_hat);
    const std::size_t keep = std::max<std::size_t>(1, options.keep_every);
    for (std::size_t step = 1; step <= s.steps; ++step) {
        transformed_nonlinear(u_hat, nu);
        for (std::size_t k = 0; k < n; ++k) a_hat[k] = e2[k] * u_hat[k] + q[k] * nu[k];
        transformed_nonlinear(a_hat, na);
        for (std::size_t k = 0; k < n; ++k) b_hat[k] = e2[k] * u_hat[k] + q[k] * na[k];
        transformed_nonlinear(b_hat, nb);
        for (std::size_t k = 0; k < n; ++k) c_hat[k] = e2[k] * a_hat[k] + q[k] * (2.0 * nb[k] - nu[k]);
        transformed_nonlinear(c_hat, nc);
        for (std::size_t k = 0; k < n; ++k)
            u_hat[k] = e[k] * u_hat[k] + f1[k] * nu[k] + 2.0 * f2[k] * (na[k] + nb[k]) + f3[k] * nc[k];
        grid.inverse(u_hat, u);
        if (real) {
            drop_imaginary(u);
            grid.forward(u, u_hat);
        }
        const double t = static_cast<double>(step) * h;
        guard(u, options.blowup_threshold, step, t);
        if (step % keep == 0 || step == s.steps) {
            out.times.push_back(t);
            out.u.push_back(u);
        }
    }
    return out;
}

ReferenceSolution run_matrix(const Problem& problem, std::span<const Complex> u0, const Stepper& s,
                             const ReferenceOptions& options) {
    const Eigen::MatrixXd a = problem.linear_matrix().matrix;
    const auto n = a.rows();
    const double h = s.dt;
    const auto full = phi_functions(h * a, 3);
    const auto half = phi_functions(0.5 * h * a, 1);
    const Eigen::MatrixXd& e = full[0];
    const Eigen::MatrixXd& e2 = half[0];
    const Eigen::MatrixXd q = 0.5 * h * half[1];
    const Eigen::MatrixXd f1 = h * (full[1] - 3.0 * full[2] + 4.0 * full[3]);
    const Eigen::MatrixXd f2 = h * (full[2] - 2.0 * full[3]);
    const Eigen::MatrixXd f3 = h * (4.0 * full[3] - full[2]);

    const std::size_t points = static_cast<std::size_t>(n);
    CVector in(points), work(points);
    auto nonlinear = [&](const Eigen::VectorXd& v) {
        for (std::size_t i = 0; i < points; ++i) in[i] = v[static_cast<Eigen::Index>(i)];
        problem.nonlinear(in, work);
        Eigen::VectorXd r(n);
        for (std::size_t i = 0; i < points; ++i) r[static_cast<Eigen::Index>(i)] = work[i].real();
        return r;
    };
    auto to_field = [&](const Eigen::VectorXd& v) {
        CVector f(points);
        for (std::size_t i = 0; i < points; ++i) f[i] = v[static_cast<Eigen::Index>(i)];
        return f;
    };

    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = u0[static_cast<std::size_t>(i)].real();
    ReferenceSolution out;
    out.times.push_back(0.0);
    out.u.push_back(to_field(u));
    const std::size_t keep = std::max<std::size_t>(1, options.keep_every);
    for (std::size_t step = 1; step <= s.steps; ++step) {
        const Eigen::VectorXd nu = nonlinear(u);
        const Eigen::VectorXd eu = e2 * u;
        const Eigen::VectorXd av = eu + q * nu;
        const Eigen::VectorXd na = nonlinear(av);
        const Eigen::VectorXd bv = eu + q * na;
        const Eigen::VectorXd nb = nonlinear(bv);
        const Eigen::VectorXd cv = e2 * av + q * (2.0 * nb - nu);
        const Eigen::VectorXd nc = nonlinear(cv);
        u = e * u + f1 * nu + 2.0 * (f2 * (na + nb)) + f3 * nc;
        const double t = static_cast<double>(step) * h;
        const CVector f = to_field(u);
        guard(f, options.blowup_threshold, step, t);
        if (step % keep == 0 || step == s.steps) {
            out.times.push_back(t);
            out.u.push_back(f);
        }
    }
    return out;
}

}  // namespace

ReferenceSolution etdrk4_run(const Problem& problem, std::span<const Complex> u0, double dt, double t_end,
                             const ReferenceOptions& options) {
    if (u0.size() != problem.points()) throw Error(ErrorKind::dimension, "reference: u0 does not match the grid");
    const Stepper s = plan_steps(dt, t_end);
    if (problem.model().kind == ModelKind::allen_cahn) return run_matrix(problem, u0, s, options);
    return run_symbol(problem, u0, s, options);
}

OrderFit convergence_order(std::span<const double> errors, std::span<const double> dts, double floor) {
    if (errors.size() != dts.size()) throw Error(ErrorKind::dimension, "order fit: errors and steps differ");
    std::vector<std::size_t> idx(dts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dts[a] > dts[b]; });

    OrderFit fit;
    std::vector<double> lx, ly;
    for (std::size_t i : idx) {
        if (!(dts[i] > 0.0)) throw Error(ErrorKind::validation, "order fit: steps must be positive");
        if (!(errors[i] >= floor) || !std::isfinite(errors[i])) {
            fit.trimmed = true;
            continue;
        }
        lx.push_back(std::log(dts[i]));
        ly.push_back(std::log(errors[i]));
    }
    // A fine-end error that no longer decreases has reached the floor.
    while (ly.size() > 2 && ly.back() >= ly[ly.size() - 2]) {
        lx.pop_back();
        ly.pop_back();
        fit.trimmed = true;
    }
    if (lx.size() < 2) throw Error(ErrorKind::validation, "order fit: fewer than two usable points");
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) throw Error(ErrorKind::validation, "order fit: all steps are equal");
    fit.slope = sxy / sxx;
    fit.used = lx.size();
    return fit;
}

ErrorReport error_report(const RunResult& run, const std::vector<FunctionalKind>& monitored,
                         const ExactSolution& exact) {
    ErrorReport report;
    report.times = run.times;
    for (const auto& b : run.blocks) report.seconds += b.seconds;
    if (exact) {
        CVector ref;
        for (std::size_t k = 0; k < run.times.size(); ++k) {
            ref.assign(run.u[k].size(), 0.0);
            exact(run.times[k], ref);
            report.solution_error.push_back(max_abs_diff(run.u[k], ref));
        }
    }
    const std::size_t count = std::min(monitored.size(), run.invariants.size());
    for (std::size_t m = 0; m < count; ++m) {
        InvariantDrift d;
        d.kind = monitored[m];
        const Complex c = run.invariant_reference[m];
        for (const Complex& q : run.invariants[m]) {
            const double abs_drift = std::abs(q - c);
            d.absolute.push_back(abs_drift);
            d.relative.push_back(std::abs(c) > 0.0 ? abs_drift / std::abs(c) : abs_drift);
        }
        report.drift.push_back(std::move(d));
    }
    return report;
}

}  // namespace tdsr
