#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "tdsr/error.hpp"
#include "tdsr/contour.hpp"
#include "tdsr/propagator.hpp"

using namespace tdsr;

namespace {

Eigen::MatrixXd symmetric_test_matrix(int n, double shift, double spread) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) q(i, j) = std::sin(1.0 + i * 1.3 + j * 0.7 + i * j * 0.11);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::VectorXd lam(n);
    for (int i = 0; i < n; ++i) lam[i] = shift - spread * i / (n - 1.0);
    return Q * lam.asDiagonal() * Q.transpose();
}

Eigen::MatrixXd oracle_phi(const Eigen::MatrixXd& a, int k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    Eigen::VectorXd f(a.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const double l = es.eigenvalues()[i];
        if (std::abs(l) < 1.0) {
            f[i] = oracle::phi_series(k, l).real();
        } else {
            // phi_k(l) = (phi_{k-1}(l) - 1/(k-1)!) / l, from phi_0 = e^l.
            long double p = std::exp(static_cast<long double>(l)), fact = 1.0L;
            for (int j = 1; j <= k; ++j) {
                p = (p - 1.0 / fact) / l;
                fact *= j;
            }
            f[i] = static_cast<double>(p);
        }
    }
    return es.eigenvectors() * f.asDiagonal() * es.eigenvectors().transpose();
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("matrix exponential against eigendecomposition") {
    for (double spread : {0.5, 20.0, 400.0}) {
        const auto a = symmetric_test_matrix(12, 0.3, spread);
        CHECK(rel(matrix_exponential(a), oracle_phi(a, 0)) < 1e-12);
    }
}

TEST_CASE("phi functions by scaling and squaring") {
    for (double spread : {0.1, 3.0, 200.0, 5000.0}) {
        const auto a = symmetric_test_matrix(10, 0.0, spread);
        const auto phi = phi_functions(a, 3);
        REQUIRE(phi.size() == 4);
        for (int k = 0; k <= 3; ++k) {
            CAPTURE(spread);
            CAPTURE(k);
            CHECK(rel(phi[k], oracle_phi(a, k)) < 1e-11);
        }
    }
}

TEST_CASE("contour phi matrix against eigendecomposition") {
    const auto a = symmetric_test_matrix(8, 0.5, 6.0);
    const auto c = contour_phi_matrix([](Complex z) { return stabilized(phi1_closed, z); }, a);
    CHECK(rel(c, oracle_phi(a, 1)) < 1e-11);
    const auto c2 = contour_phi_matrix([](Complex z) { return stabilized(phi2_closed, z); }, a);
    CHECK(rel(c2, oracle_phi(a, 2)) < 1e-11);
}

TEST_CASE("contour must enclose the Gershgorin discs") {
    const auto a = symmetric_test_matrix(6, 0.0, 4.0);
    const auto circle = gershgorin_circle(a);
    for (int i = 0; i < a.rows(); ++i) {
        const double reach = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
        CHECK(std::abs(a(i, i) - circle.center) + reach <= circle.radius);
    }
    ContourOptions bad;
    bad.circle = ContourCircle{10.0, 1.0};
    try {
        contour_phi_matrix([](Complex z) { return std::exp(z); }, a, bad);
        FAIL("expected a contour error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::contour);
    }
}

TEST_CASE("exponential refuses matrices beyond the norm cap") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3) * 1e13;
    try {
        matrix_exponential(a);
        FAIL("expected a stiffness error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::stiffness);
    }
}

TEST_CASE("symbol semigroup on a single Fourier mode") {
    auto g = PeriodicGrid::line(2.0 * std::numbers::pi, 64);
    const double eps = 0.7;
    const auto sym = kdv_symbol(g, eps);
    CVector f(64), out(64);
    for (std::size_t i = 0; i < 64; ++i) f[i] = std::exp(Complex(0.0, 3.0 * g.coordinate(i, 0)));
    apply_semigroup_symbol(g, sym, 0.4, f, out);
    const Complex factor = std::exp(0.4 * Complex(0.0, eps * eps * 27.0));
    for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(out[i] - factor * f[i]) < 1e-13);

    const auto s2 = schrodinger_symbol(PeriodicGrid::plane(4.0, 4.0, 8, 8));
    for (const auto& v : s2.values) CHECK(v.real() == 0.0);
}

TEST_CASE("diffusion matrices encode the boundary") {
    ChebyshevGrid c(-2.0, 2.0, 32);
    const auto neu = diffusion_matrix(c, 0.5, MatrixBoundary::neumann);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(33);
    CHECK((neu.matrix * ones).cwiseAbs().maxCoeff() < 1e-10);
    // cos(pi x / 2) has zero slope at both ends.
    const double k = std::numbers::pi / 2.0;
    Eigen::VectorXd f(33);
    for (int i = 0; i < 33; ++i) f[i] = std::cos(k * c.nodes()[i]);
    const Eigen::VectorXd lap = neu.matrix * f;
    for (int i = 0; i < 33; ++i) CHECK(std::abs(lap[i] + 0.5 * k * k * f[i]) < 1e-9);

    const auto dir = diffusion_matrix(c, 1.0, MatrixBoundary::dirichlet);
    CHECK(dir.matrix.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(dir.matrix.col(32).cwiseAbs().maxCoeff() == 0.0);
}
