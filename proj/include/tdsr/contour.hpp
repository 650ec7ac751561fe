#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "tdsr/field.hpp"

namespace tdsr {

/// Settings for evaluating scalar functions with a removable singularity at 0.
/// Inside `switch_radius` the closed form is replaced by its mean over a circle
/// of `radius` around the evaluation point (Cauchy integral formula).
struct ScalarContour {
    double switch_radius = 0.5;
    double radius = 1.0;
    int points = 32;
};

/// Mean of f over `points` equally spaced nodes on a circle of `radius` about z.
/// For real z the nodes are taken in conjugate pairs and the real part kept.
template <class F>
Complex contour_mean(F&& f, Complex z, double radius, int points) {
    const double pi = std::numbers::pi;
    if (z.imag() == 0.0 && points % 2 == 0) {
        Complex sum = 0.0;
        for (int k = 0; k < points / 2; ++k) {
            const double theta = pi * (2.0 * k + 1.0) / points;
            sum += 2.0 * f(z + radius * std::polar(1.0, theta)).real();
        }
        return sum / static_cast<double>(points);
    }
    Complex sum = 0.0;
    for (int k = 0; k < points; ++k) {
        const double theta = pi * (2.0 * k + 1.0) / points;
        sum += f(z + radius * std::polar(1.0, theta));
    }
    return sum / static_cast<double>(points);
}

template <class F>
Complex stabilized(F&& closed_form, Complex z, const ScalarContour& c = {}) {
    if (std::abs(z) >= c.switch_radius) return closed_form(z);
    return contour_mean(closed_form, z, c.radius, c.points);
}

/// Closed forms of phi_1..phi_3, singular at 0; pair with `stabilized`.
inline Complex phi1_closed(Complex z) { return (std::exp(z) - 1.0) / z; }
inline Complex phi2_closed(Complex z) { return (std::exp(z) - 1.0 - z) / (z * z); }
inline Complex phi3_closed(Complex z) { return (std::exp(z) - 1.0 - z - 0.5 * z * z) / (z * z * z); }

}  // namespace tdsr
