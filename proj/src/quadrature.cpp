#include "tdsr/quadrature.hpp"

#include <cmath>

#include "tdsr/error.hpp"

namespace tdsr {

namespace filon {

Complex q1(Complex z) {
    const Complex e = std::exp(-2.0 * z);
    return (-z * e - 2.0 * e + 2.0 * z * z - 3.0 * z + 2.0) / (2.0 * z * z * z);
}

Complex q2(Complex z) {
    const Complex e = std::exp(-2.0 * z);
    return (2.0 * z * e + 2.0 * e + 2.0 * z - 2.0) / (z * z * z);
}

Complex q3(Complex z) {
    const Complex e = std::exp(-2.0 * z);
    return (-2.0 * z * z * e - 3.0 * z * e - 2.0 * e - z + 2.0) / (2.0 * z * z * z);
}

Complex q4(Complex z) {
    const Complex e = std::exp(-3.0 * z);
    const Complex z2 = z * z;
    return (2.0 * z2 * e + 6.0 * z * e + 6.0 * e + 6.0 * z2 * z + 12.0 * z - 11.0 * z2 - 6.0) /
           (6.0 * z2 * z2);
}

Complex q5(Complex z) {
    const Complex e = std::exp(-3.0 * z);
    const Complex z2 = z * z;
    return (-3.0 * z2 * e - 8.0 * z * e - 6.0 * e + 6.0 * z2 - 10.0 * z + 6.0) / (2.0 * z2 * z2);
}

Complex q6(Complex z) {
    const Complex e = std::exp(-3.0 * z);
    const Complex z2 = z * z;
    return (6.0 * z2 * e + 10.0 * z * e + 6.0 * e - 3.0 * z2 + 8.0 * z - 6.0) / (2.0 * z2 * z2);
}

Complex q7(Complex z) {
    const Complex e = std::exp(-3.0 * z);
    const Complex z2 = z * z;
    return (-6.0 * z2 * z * e - 11.0 * z2 * e - 12.0 * z * e - 6.0 * e + 2.0 * z2 - 6.0 * z + 6.0) /
           (6.0 * z2 * z2);
}

}  // namespace filon

FilonCoefficients filon_coefficients(const LinearSymbol& symbol, double dt, const ScalarContour& contour) {
    if (!(dt > 0.0)) throw Error(ErrorKind::validation, "time step must be positive");
    const std::size_t n = symbol.values.size();
    FilonCoefficients c;
    c.dt = dt;
    c.z.resize(n);
    for (auto* v : {&c.q1, &c.q2, &c.q3, &c.q4, &c.q5, &c.q6, &c.q7, &c.step, &c.double_step}) v->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Complex z = dt * symbol.values[i];
        c.z[i] = z;
        c.q1[i] = dt * stabilized(filon::q1, z, contour);
        c.q2[i] = dt * stabilized(filon::q2, z, contour);
        c.q3[i] = dt * stabilized(filon::q3, z, contour);
        c.q4[i] = dt * stabilized(filon::q4, z, contour);
        c.q5[i] = dt * stabilized(filon::q5, z, contour);
        c.q6[i] = dt * stabilized(filon::q6, z, contour);
        c.q7[i] = dt * stabilized(filon::q7, z, contour);
        c.step[i] = std::exp(z);
        c.double_step[i] = std::exp(2.0 * z);
    }
    return c;
}

SpaceTimeField duhamel_series_symbol(const SpaceTimeField& g_hat, const FilonCoefficients& c) {
    const std::size_t levels = g_hat.levels();
    const std::size_t n = g_hat.points();
    if (levels < 4)
        throw Error(ErrorKind::insufficient_levels, "Filon startup needs at least four time levels");
    if (n != c.z.size()) throw Error(ErrorKind::dimension, "coefficients do not match spectrum length");

    SpaceTimeField out(levels, n);
    {
        auto i1 = out.level(1);
        const auto g0 = g_hat.level(0), g1 = g_hat.level(1), g2 = g_hat.level(2), g3 = g_hat.level(3);
        for (std::size_t k = 0; k < n; ++k) {
            const Complex e = c.step[k];
            i1[k] = c.q4[k] * e * g0[k] + (c.q5[k] * e - c.q1[k]) * g1[k] +
                    (c.q6[k] * e - c.q2[k]) * g2[k] + (c.q7[k] * e - c.q3[k]) * g3[k];
        }
    }
    for (std::size_t i = 1; i + 1 < levels; ++i) {
        const auto prev = out.level(i - 1);
        auto next = out.level(i + 1);
        const auto ga = g_hat.level(i - 1), gb = g_hat.level(i), gc = g_hat.level(i + 1);
        for (std::size_t k = 0; k < n; ++k) {
            next[k] = c.double_step[k] * (prev[k] + c.q1[k] * ga[k] + c.q2[k] * gb[k] + c.q3[k] * gc[k]);
        }
    }
    return out;
}

namespace {

Complex a_tilde(Complex z) { return (std::exp(-z) + z - 1.0) / (z * z); }
Complex b_tilde(Complex z) { return (1.0 - z * std::exp(-z) - std::exp(-z)) / (z * z); }
Complex phi1_minus_phi2(Complex z) { return (z * std::exp(z) - std::exp(z) + 1.0) / (z * z); }

}  // namespace

TrapezoidalMatrixCoefficients trapezoidal_matrix_coefficients(const Eigen::MatrixXd& scaled, double dt,
                                                              const ContourOptions& options) {
    TrapezoidalMatrixCoefficients c;
    c.a = dt * contour_phi_matrix([](Complex z) { return stabilized(a_tilde, z); }, scaled, options);
    c.b = dt * contour_phi_matrix([](Complex z) { return stabilized(b_tilde, z); }, scaled, options);
    return c;
}

MatrixDuhamelWeights matrix_duhamel_weights(const LinearMatrix& linear, double dt,
                                            const ContourOptions& options) {
    if (!(dt > 0.0)) throw Error(ErrorKind::validation, "time step must be positive");
    const Eigen::MatrixXd scaled = linear.scaled(dt);
    const ContourCircle circle = gershgorin_circle(scaled);
    MatrixDuhamelWeights w;
    w.dt = dt;
    if (circle.radius <= 8.0 && circle.center + circle.radius <= 4.0) {
        w.via_contour = true;
        w.step = matrix_exponential(scaled);
        w.prev = dt * contour_phi_matrix([](Complex z) { return stabilized(phi1_minus_phi2, z); },
                                         scaled, options);
        w.next = dt * contour_phi_matrix([](Complex z) { return stabilized(phi2_closed, z); },
                                         scaled, options);
    } else {
        const auto phi = phi_functions(scaled, 2);
        w.step = phi[0];
        w.prev = dt * (phi[1] - phi[2]);
        w.next = dt * phi[2];
    }
    return w;
}

namespace {

Eigen::MatrixXd real_columns(const SpaceTimeField& f) {
    const auto n = static_cast<Eigen::Index>(f.points());
    const auto levels = static_cast<Eigen::Index>(f.levels());
    Eigen::MatrixXd m(n, levels);
    for (Eigen::Index i = 0; i < levels; ++i) {
        const auto lv = f.level(static_cast<std::size_t>(i));
        for (Eigen::Index j = 0; j < n; ++j) m(j, i) = lv[static_cast<std::size_t>(j)].real();
    }
    return m;
}

}  // namespace

SpaceTimeField duhamel_series_matrix(const SpaceTimeField& g, const MatrixDuhamelWeights& w) {
    const auto n = static_cast<Eigen::Index>(g.points());
    if (n != w.step.rows()) throw Error(ErrorKind::dimension, "weights do not match field length");
    const std::size_t levels = g.levels();
    SpaceTimeField out(levels, g.points());
    if (levels == 0) return out;

    const Eigen::MatrixXd gm = real_columns(g);
    Eigen::MatrixXd from_prev(n, static_cast<Eigen::Index>(levels));
    Eigen::MatrixXd from_next(n, static_cast<Eigen::Index>(levels));
    from_prev.noalias() = w.prev * gm;
    from_next.noalias() = w.next * gm;

    Eigen::VectorXd current = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd stepped(n);
    for (std::size_t i = 0; i + 1 < levels; ++i) {
        stepped.noalias() = w.step * current;
        current = stepped + from_prev.col(static_cast<Eigen::Index>(i)) +
                  from_next.col(static_cast<Eigen::Index>(i + 1));
        auto lv = out.level(i + 1);
        for (Eigen::Index j = 0; j < n; ++j) lv[static_cast<std::size_t>(j)] = current[j];
    }
    return out;
}

FilonFlow::FilonFlow(PeriodicGrid grid, LinearSymbol symbol, double dt, const ScalarContour& contour)
    : LinearFlow(dt), grid_(std::move(grid)), symbol_(std::move(symbol)),
      coeffs_(filon_coefficients(symbol_, dt, contour)) {
    if (symbol_.values.size() != grid_.size()) throw Error(ErrorKind::dimension, "symbol does not match grid");
}

void FilonFlow::propagate(std::span<const Complex> f, SpaceTimeField& out) const {
    const std::size_t n = grid_.size();
    CVector f_hat(n), work(n);
    grid_.forward(f, f_hat);
    for (std::size_t i = 0; i < out.levels(); ++i) {
        const double t = dt() * static_cast<double>(i);
        for (std::size_t k = 0; k < n; ++k) work[k] = std::exp(t * symbol_.values[k]) * f_hat[k];
        grid_.inverse(work, out.level(i));
    }
}

SpaceTimeField FilonFlow::duhamel(const SpaceTimeField& g) const {
    SpaceTimeField g_hat(g.levels(), g.points());
    for (std::size_t i = 0; i < g.levels(); ++i) grid_.forward(g.level(i), g_hat.level(i));
    SpaceTimeField out = duhamel_series_symbol(g_hat, coeffs_);
    for (std::size_t i = 0; i < out.levels(); ++i) grid_.inverse(out.level(i), out.level(i));
    return out;
}

TrapezoidalFlow::TrapezoidalFlow(const LinearMatrix& linear, double dt, const ContourOptions& options)
    : LinearFlow(dt), weights_(matrix_duhamel_weights(linear, dt, options)) {}

void TrapezoidalFlow::propagate(std::span<const Complex> f, SpaceTimeField& out) const {
    const auto n = weights_.step.rows();
    if (static_cast<std::size_t>(n) != f.size()) throw Error(ErrorKind::dimension, "field length mismatch");
    Eigen::VectorXd current(n), next(n);
    for (Eigen::Index j = 0; j < n; ++j) current[j] = f[static_cast<std::size_t>(j)].real();
    for (std::size_t i = 0; i < out.levels(); ++i) {
        if (i > 0) {
            next.noalias() = weights_.step * current;
            current.swap(next);
        }
        auto lv = out.level(i);
        for (Eigen::Index j = 0; j < n; ++j) lv[static_cast<std::size_t>(j)] = current[j];
    }
}

SpaceTimeField TrapezoidalFlow::duhamel(const SpaceTimeField& g) const {
    return duhamel_series_matrix(g, weights_);
}

}  // namespace tdsr
