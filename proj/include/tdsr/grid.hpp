#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "tdsr/field.hpp"

namespace tdsr {

enum class GridOrigin {
    centered,  // nodes cover [-L/2, L/2)
    zero,      // nodes cover [0, L)
};

namespace detail {
struct FftPlans;
}

/// Uniform periodic grid in one or two dimensions with FFT-based spectral
/// operations. Flat index of point (i0, i1) is i0 * count(1) + i1.
///
/// Transform convention: forward is the unnormalized DFT sum, inverse carries
/// the 1/N factor, so inverse(forward(f)) == f.
class PeriodicGrid {
public:
    static PeriodicGrid line(double length, std::size_t count,
                             GridOrigin origin = GridOrigin::centered);
    static PeriodicGrid plane(double length_x, double length_y, std::size_t count_x,
                              std::size_t count_y, GridOrigin origin = GridOrigin::centered);

    int dimension() const noexcept { return static_cast<int>(axes_.size()); }
    std::size_t size() const noexcept { return size_; }
    std::size_t count(int axis) const { return axes_.at(axis).count; }
    double length(int axis) const { return axes_.at(axis).length; }
    double spacing(int axis) const { return axes_.at(axis).length / axes_.at(axis).count; }
    double cell_volume() const noexcept { return cell_volume_; }

    std::span<const double> coordinates(int axis) const { return axes_.at(axis).nodes; }
    std::span<const double> wavenumbers(int axis) const { return axes_.at(axis).k; }

    /// Coordinate along `axis` of the point with flat index `index`.
    double coordinate(std::size_t index, int axis) const;
    /// Wavenumber along `axis` of the spectral slot with flat index `index`.
    double wavenumber(std::size_t index, int axis) const;
    /// |k|^2 summed over axes for spectral slot `index`.
    double wavenumber_squared(std::size_t index) const;

    void forward(std::span<const Complex> field, std::span<Complex> spectrum) const;
    void inverse(std::span<const Complex> spectrum, std::span<Complex> field) const;

    /// Rectangle rule; spectrally exact for resolved periodic integrands.
    Complex integrate(std::span<const Complex> field) const;
    double integrate(std::span<const double> field) const;

    /// order-th derivative along `axis`, multiplying by (ik)^order in Fourier
    /// space. The Nyquist slot is zeroed for odd orders.
    void differentiate(std::span<const Complex> field, std::span<Complex> out, int order,
                       int axis = 0) const;

    /// Zero every spectral slot with |m| > N/3 on any axis (2/3 rule).
    void dealias(std::span<Complex> spectrum) const;

private:
    struct Axis {
        std::size_t count = 0;
        double length = 0.0;
        std::vector<double> nodes;
        std::vector<double> k;
    };

    PeriodicGrid() = default;
    void check_size(std::size_t n) const;

    std::vector<Axis> axes_;
    std::size_t size_ = 0;
    double cell_volume_ = 0.0;
    std::shared_ptr<const detail::FftPlans> plans_;
};

/// Chebyshev-Lobatto grid on [left, right] with N+1 nodes. Nodes are ordered
/// as x_j = left + (cos(pi j / N) + 1)(right - left)/2, i.e. descending from
/// `right` to `left`.
class ChebyshevGrid {
public:
    ChebyshevGrid(double left, double right, std::size_t n_intervals);

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t intervals() const noexcept { return nodes_.size() - 1; }
    double left() const noexcept { return left_; }
    double right() const noexcept { return right_; }

    std::span<const double> nodes() const { return nodes_; }
    /// First-derivative collocation matrix, already scaled to [left, right].
    const Eigen::MatrixXd& diff_matrix() const { return diff_; }
    /// Clenshaw-Curtis weights, already scaled to [left, right].
    std::span<const double> weights() const { return weights_; }

    Complex integrate(std::span<const Complex> field) const;
    double integrate(std::span<const double> field) const;
    void differentiate(std::span<const Complex> field, std::span<Complex> out, int order) const;

private:
    void check_size(std::size_t n) const;

    double left_;
    double right_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    Eigen::MatrixXd diff_;
};

using SpatialGrid = std::variant<PeriodicGrid, ChebyshevGrid>;

std::size_t grid_size(const SpatialGrid& grid);
Complex integrate(const SpatialGrid& grid, std::span<const Complex> field);
void differentiate(const SpatialGrid& grid, std::span<const Complex> field, std::span<Complex> out,
                   int order, int axis = 0);
/// Node coordinate along `axis` for each flat index.
std::vector<double> node_coordinates(const SpatialGrid& grid, int axis = 0);

/// Version string of the FFT library in use.
const char* fft_backend_version();

}  // namespace tdsr
