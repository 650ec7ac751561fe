#include "tdsr/propagator.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "tdsr/error.hpp"

namespace tdsr {

LinearSymbol kdv_symbol(const PeriodicGrid& grid, double epsilon) {
    if (grid.dimension() != 1) throw Error(ErrorKind::dimension, "KdV symbol needs a 1D grid");
    LinearSymbol s;
    s.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double k = grid.wavenumber(i, 0);
        s.values[i] = Complex(0.0, epsilon * epsilon * k * k * k);
    }
    return s;
}

LinearSymbol schrodinger_symbol(const PeriodicGrid& grid) {
    LinearSymbol s;
    s.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) s.values[i] = Complex(0.0, -grid.wavenumber_squared(i));
    return s;
}

void apply_semigroup_symbol(const PeriodicGrid& grid, const LinearSymbol& symbol, double t,
                            std::span<const Complex> in, std::span<Complex> out) {
    if (symbol.values.size() != grid.size()) throw Error(ErrorKind::dimension, "symbol does not match grid");
    grid.forward(in, out);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(t * symbol.values[i]);
    grid.inverse(out, out);
}

LinearMatrix diffusion_matrix(const ChebyshevGrid& grid, double diffusion, MatrixBoundary boundary) {
    const Eigen::MatrixXd& d = grid.diff_matrix();
    const Eigen::Index n = d.rows();
    LinearMatrix m;
    m.boundary = boundary;
    if (boundary == MatrixBoundary::neumann) {
        Eigen::MatrixXd d0 = d;
        d0.row(0).setZero();
        d0.row(n - 1).setZero();
        m.matrix.noalias() = d * d0;
    } else {
        m.matrix.noalias() = d * d;
        m.matrix.row(0).setZero();
        m.matrix.row(n - 1).setZero();
        m.matrix.col(0).setZero();
        m.matrix.col(n - 1).setZero();
    }
    m.matrix *= diffusion;
    return m;
}

namespace {

double one_norm(const Eigen::MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

void check_finite(const Eigen::MatrixXd& a, const char* what) {
    if (!a.allFinite())
        throw Error(ErrorKind::stiffness, std::string(what) + " overflowed; reduce the time step");
}

}  // namespace

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& scaled, const ExpmOptions& options) {
    if (scaled.rows() != scaled.cols()) throw Error(ErrorKind::dimension, "matrix must be square");
    if (!scaled.allFinite()) throw Error(ErrorKind::stiffness, "matrix has non-finite entries");
    if (one_norm(scaled) > options.norm_cap)
        throw Error(ErrorKind::stiffness, "scaled matrix norm exceeds cap; reduce the time step");
    Eigen::MatrixXd e = scaled.exp();
    check_finite(e, "matrix exponential");
    return e;
}

ContourCircle gershgorin_circle(const Eigen::MatrixXd& a, double inflation) {
    const Eigen::Index n = a.rows();
    double center = a.diagonal().mean();
    double reach = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double off = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
        reach = std::max(reach, std::abs(a(i, i) - center) + off);
    }
    return {center, reach > 0.0 ? inflation * reach : 1.0};
}

Eigen::MatrixXd contour_phi_matrix(const ScalarFunction& phi, const Eigen::MatrixXd& scaled,
                                   const ContourOptions& options) {
    const Eigen::Index n = scaled.rows();
    if (scaled.cols() != n) throw Error(ErrorKind::dimension, "matrix must be square");
    if (options.points < 4 || options.points % 2 != 0)
        throw Error(ErrorKind::contour, "contour point count must be even and at least 4");

    ContourCircle circle = gershgorin_circle(scaled);
    if (options.circle) {
        circle = *options.circle;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double off = scaled.row(i).cwiseAbs().sum() - std::abs(scaled(i, i));
            if (std::abs(scaled(i, i) - circle.center) + off >= circle.radius)
                throw Error(ErrorKind::contour, "contour does not enclose every Gershgorin disc");
        }
    }

    const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd a = scaled.cast<Complex>();
    // Integrand of the angle-parametrized Cauchy integral at angle theta.
    auto integrand = [&](double theta) -> Eigen::MatrixXd {
        const Complex w = circle.radius * std::polar(1.0, theta);
        const Complex zeta = circle.center + w;
        Eigen::MatrixXcd shifted = zeta * identity - a;
        Eigen::MatrixXcd resolvent = shifted.partialPivLu().solve(identity);
        return (phi(zeta) * w * resolvent).real();
    };

    const double pi = std::numbers::pi;
    int m = options.points;
    // Nodes at theta_k = 2 pi k / m; the two real-axis nodes are self-conjugate,
    // the rest come in conjugate pairs.
    Eigen::MatrixXd total = integrand(0.0) + integrand(pi);
    for (int k = 1; k < m / 2; ++k) total += 2.0 * integrand(2.0 * pi * k / m);
    Eigen::MatrixXd estimate = total / static_cast<double>(m);

    while (true) {
        if (2 * m > options.max_points) {
            throw Error(ErrorKind::contour, "contour quadrature did not converge with " +
                                                std::to_string(m) + " points");
        }
        for (int j = 1; j < m; j += 2) total += 2.0 * integrand(pi * j / m);
        m *= 2;
        Eigen::MatrixXd refined = total / static_cast<double>(m);
        const double change = (refined - estimate).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, refined.cwiseAbs().maxCoeff());
        estimate = std::move(refined);
        if (change <= options.tolerance * scale) break;
    }
    return estimate;
}

std::vector<Eigen::MatrixXd> phi_functions(const Eigen::MatrixXd& scaled, int max_order,
                                           const ExpmOptions& options) {
    const Eigen::Index n = scaled.rows();
    if (scaled.cols() != n) throw Error(ErrorKind::dimension, "matrix must be square");
    if (max_order < 0) throw Error(ErrorKind::dimension, "phi order must be non-negative");
    if (!scaled.allFinite()) throw Error(ErrorKind::stiffness, "matrix has non-finite entries");
    const double norm = one_norm(scaled);
    if (norm > options.norm_cap)
        throw Error(ErrorKind::stiffness, "scaled matrix norm exceeds cap; reduce the time step");

    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd b = scaled / std::ldexp(1.0, squarings);

    std::vector<double> inv_factorial(40);
    inv_factorial[0] = 1.0;
    for (std::size_t i = 1; i < inv_factorial.size(); ++i) inv_factorial[i] = inv_factorial[i - 1] / i;

    // ||b|| <= 1/2: 16 Taylor terms leave a remainder below 1e-17.
    constexpr int terms = 16;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    std::vector<Eigen::MatrixXd> phi(max_order + 1);
    Eigen::MatrixXd acc = inv_factorial[terms + max_order] * identity;
    Eigen::MatrixXd tmp(n, n);
    for (int m = terms - 1; m >= 0; --m) {
        tmp.noalias() = b * acc;
        acc = tmp + inv_factorial[m + max_order] * identity;
    }
    phi[max_order] = acc;
    for (int k = max_order - 1; k >= 0; --k) {
        tmp.noalias() = b * phi[k + 1];
        phi[k] = tmp + inv_factorial[k] * identity;
    }

    for (int s = 0; s < squarings; ++s) {
        std::vector<Eigen::MatrixXd> next(max_order + 1);
        for (int k = max_order; k >= 1; --k) {
            Eigen::MatrixXd acc_k(n, n);
            acc_k.noalias() = phi[0] * phi[k];
            for (int j = 1; j <= k; ++j) acc_k += inv_factorial[k - j] * phi[j];
            next[k] = std::ldexp(1.0, -k) * acc_k;
        }
        next[0].noalias() = phi[0] * phi[0];
        phi = std::move(next);
    }
    for (const auto& p : phi) check_finite(p, "phi-function evaluation");
    return phi;
}

}  // namespace tdsr
