#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

/// Gauss-Legendre nodes and weights on [a, b] by Newton iteration on P_n.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p1 = z, p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = 0.5 * (a + b) + 0.5 * (b - a) * z;
        w[i] = (b - a) / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Composite Gauss-Legendre over `panels` equal panels.
template <class F>
auto integrate(F&& f, double a, double b, int panels = 64, int order = 20) {
    using R = decltype(f(a));
    R sum{};
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        auto [x, w] = gauss_legendre(order, a + p * h, a + (p + 1) * h);
        for (int i = 0; i < order; ++i) sum += w[i] * f(x[i]);
    }
    return sum;
}

/// Lagrange basis polynomial j through equally spaced nodes 0, h, 2h, ...
inline double lagrange(int j, int count, double h, double s) {
    double v = 1.0;
    for (int m = 0; m < count; ++m)
        if (m != j) v *= (s - m * h) / ((j - m) * h);
    return v;
}

/// phi_k(z) by its power series; accurate for |z| of order one.
inline std::complex<double> phi_series(int k, std::complex<double> z) {
    std::complex<long double> zl(z.real(), z.imag()), term = 1.0L, sum = 0.0L;
    long double fact = 1.0L;
    for (int j = 1; j <= k; ++j) fact *= j;
    term = 1.0L / fact;
    for (int m = 0; m < 400; ++m) {
        sum += term;
        term *= zl / static_cast<long double>(m + k + 1);
    }
    return {static_cast<double>(sum.real()), static_cast<double>(sum.imag())};
}

}  // namespace oracle
