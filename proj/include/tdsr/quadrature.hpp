#pragma once

#include <Eigen/Dense>

#include <memory>

#include "tdsr/contour.hpp"
#include "tdsr/field.hpp"
#include "tdsr/grid.hpp"
#include "tdsr/propagator.hpp"

namespace tdsr {

/// Closed forms of the Filon-Simpson weights divided by dt, as functions of
/// z = dt * symbol. All have a removable singularity at z = 0.
namespace filon {
Complex q1(Complex z);
Complex q2(Complex z);
Complex q3(Complex z);
Complex q4(Complex z);
Complex q5(Complex z);
Complex q6(Complex z);
Complex q7(Complex z);
}  // namespace filon

/// Per-wavenumber weights for the Duhamel recurrence. q1..q3 weight the
/// quadratic interpolant on [t_{i-1}, t_{i+1}], q4..q7 the cubic on [0, 3 dt].
struct FilonCoefficients {
    double dt = 0.0;
    CVector z;
    CVector q1, q2, q3, q4, q5, q6, q7;
    CVector step;         // exp(z)
    CVector double_step;  // exp(2z)
};

FilonCoefficients filon_coefficients(const LinearSymbol& symbol, double dt,
                                     const ScalarContour& contour = {});

/// Spectral Duhamel integral I^(k, t_i) from G^(k, t_i), i = 0..N_T, N_T >= 3.
SpaceTimeField duhamel_series_symbol(const SpaceTimeField& g_hat, const FilonCoefficients& c);

/// A = dt * L~^-2 (exp(-L~) + L~ - I),  B = dt * L~^-2 (I - L~ exp(-L~) - exp(-L~)).
struct TrapezoidalMatrixCoefficients {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
};

/// Raw A, B via the contour integral. Only meaningful while exp(-L~) is
/// representable, i.e. for moderate scaled matrices.
TrapezoidalMatrixCoefficients trapezoidal_matrix_coefficients(const Eigen::MatrixXd& scaled, double dt,
                                                              const ContourOptions& options = {});

/// The recurrence I(t+dt) = E [I(t) + A G(t) + B G(t+dt)] with E = exp(L~)
/// folded into the weights: prev = E A = dt (phi1 - phi2)(L~), next = E B = dt phi2(L~).
struct MatrixDuhamelWeights {
    double dt = 0.0;
    Eigen::MatrixXd step;
    Eigen::MatrixXd prev;
    Eigen::MatrixXd next;
    bool via_contour = false;
};

/// Weights from the contour route when the Gershgorin circle of L~ is small
/// (radius <= 8 and right edge <= 4), otherwise from scaling and squaring.
MatrixDuhamelWeights matrix_duhamel_weights(const LinearMatrix& linear, double dt,
                                            const ContourOptions& options = {});

/// Real-valued Duhamel integral on the collocation nodes (imaginary parts of
/// `g` are ignored), I(t_0) = 0.
SpaceTimeField duhamel_series_matrix(const SpaceTimeField& g, const MatrixDuhamelWeights& w);

/// The linear part of an evolution equation on a fixed uniform time mesh:
/// the semigroup applied to an initial field, and the Duhamel integral.
class LinearFlow {
public:
    virtual ~LinearFlow() = default;

    double dt() const noexcept { return dt_; }
    virtual std::size_t points() const = 0;
    virtual std::size_t min_levels() const = 0;

    /// out.level(i) = exp(t_i L) f for every level of `out`.
    virtual void propagate(std::span<const Complex> f, SpaceTimeField& out) const = 0;
    /// Physical-space Duhamel integral of `g` over the levels of `g`.
    virtual SpaceTimeField duhamel(const SpaceTimeField& g) const = 0;

protected:
    explicit LinearFlow(double dt) : dt_(dt) {}

private:
    double dt_;
};

class FilonFlow final : public LinearFlow {
public:
    FilonFlow(PeriodicGrid grid, LinearSymbol symbol, double dt, const ScalarContour& contour = {});

    std::size_t points() const override { return grid_.size(); }
    std::size_t min_levels() const override { return 4; }
    void propagate(std::span<const Complex> f, SpaceTimeField& out) const override;
    SpaceTimeField duhamel(const SpaceTimeField& g) const override;

    const FilonCoefficients& coefficients() const { return coeffs_; }

private:
    PeriodicGrid grid_;
    LinearSymbol symbol_;
    FilonCoefficients coeffs_;
};

class TrapezoidalFlow final : public LinearFlow {
public:
    TrapezoidalFlow(const LinearMatrix& linear, double dt, const ContourOptions& options = {});

    std::size_t points() const override { return static_cast<std::size_t>(weights_.step.rows()); }
    std::size_t min_levels() const override { return 2; }
    void propagate(std::span<const Complex> f, SpaceTimeField& out) const override;
    SpaceTimeField duhamel(const SpaceTimeField& g) const override;

    const MatrixDuhamelWeights& weights() const { return weights_; }

private:
    MatrixDuhamelWeights weights_;
};

}  // namespace tdsr
