#include "tdsr/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "tdsr/error.hpp"

namespace tdsr {

namespace detail {

// The planner is not thread-safe; execution on fresh arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftPlans {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;

    explicit FftPlans(const std::vector<int>& dims) {
        std::size_t total = 1;
        for (int d : dims) total *= static_cast<std::size_t>(d);
        std::vector<Complex> scratch(total);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        std::lock_guard lock(planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        const int rank = static_cast<int>(dims.size());
        forward = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_FORWARD, flags);
        inverse = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_BACKWARD, flags);
    }
    ~FftPlans() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(inverse);
    }
    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;
};

}  // namespace detail

namespace {

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

std::vector<double> make_wavenumbers(std::size_t n, double length) {
    std::vector<double> k(n);
    const double base = 2.0 * std::numbers::pi / length;
    const auto half = static_cast<long>(n / 2);
    for (std::size_t i = 0; i < n; ++i) {
        long m = static_cast<long>(i);
        if (m >= half) m -= static_cast<long>(n);
        k[i] = base * static_cast<double>(m);
    }
    return k;
}

std::vector<double> make_nodes(std::size_t n, double length, GridOrigin origin) {
    std::vector<double> x(n);
    const double start = origin == GridOrigin::centered ? -0.5 * length : 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = start + length * static_cast<double>(i) / n;
    return x;
}

}  // namespace

PeriodicGrid PeriodicGrid::line(double length, std::size_t count, GridOrigin origin) {
    if (!is_power_of_two(count)) throw Error(ErrorKind::dimension, "node count must be a power of two");
    if (!(length > 0.0)) throw Error(ErrorKind::dimension, "domain length must be positive");
    PeriodicGrid g;
    g.axes_.push_back({count, length, make_nodes(count, length, origin), make_wavenumbers(count, length)});
    g.size_ = count;
    g.cell_volume_ = length / count;
    g.plans_ = std::make_shared<detail::FftPlans>(std::vector<int>{static_cast<int>(count)});
    return g;
}

PeriodicGrid PeriodicGrid::plane(double length_x, double length_y, std::size_t count_x,
                                 std::size_t count_y, GridOrigin origin) {
    if (!is_power_of_two(count_x) || !is_power_of_two(count_y))
        throw Error(ErrorKind::dimension, "node counts must be powers of two");
    if (!(length_x > 0.0) || !(length_y > 0.0))
        throw Error(ErrorKind::dimension, "domain lengths must be positive");
    PeriodicGrid g;
    g.axes_.push_back({count_x, length_x, make_nodes(count_x, length_x, origin),
                       make_wavenumbers(count_x, length_x)});
    g.axes_.push_back({count_y, length_y, make_nodes(count_y, length_y, origin),
                       make_wavenumbers(count_y, length_y)});
    g.size_ = count_x * count_y;
    g.cell_volume_ = (length_x / count_x) * (length_y / count_y);
    g.plans_ = std::make_shared<detail::FftPlans>(
        std::vector<int>{static_cast<int>(count_x), static_cast<int>(count_y)});
    return g;
}

void PeriodicGrid::check_size(std::size_t n) const {
    if (n != size_) throw Error(ErrorKind::dimension, "field length does not match grid");
}

double PeriodicGrid::coordinate(std::size_t index, int axis) const {
    if (dimension() == 1) return axes_[0].nodes[index];
    const std::size_t ny = axes_[1].count;
    return axis == 0 ? axes_[0].nodes[index / ny] : axes_[1].nodes[index % ny];
}

double PeriodicGrid::wavenumber(std::size_t index, int axis) const {
    if (dimension() == 1) return axes_[0].k[index];
    const std::size_t ny = axes_[1].count;
    return axis == 0 ? axes_[0].k[index / ny] : axes_[1].k[index % ny];
}

double PeriodicGrid::wavenumber_squared(std::size_t index) const {
    double s = 0.0;
    for (int a = 0; a < dimension(); ++a) {
        const double k = wavenumber(index, a);
        s += k * k;
    }
    return s;
}

void PeriodicGrid::forward(std::span<const Complex> field, std::span<Complex> spectrum) const {
    check_size(field.size());
    check_size(spectrum.size());
    if (field.data() != spectrum.data()) std::copy(field.begin(), field.end(), spectrum.begin());
    auto* p = reinterpret_cast<fftw_complex*>(spectrum.data());
    fftw_execute_dft(plans_->forward, p, p);
}

void PeriodicGrid::inverse(std::span<const Complex> spectrum, std::span<Complex> field) const {
    check_size(field.size());
    check_size(spectrum.size());
    if (field.data() != spectrum.data()) std::copy(spectrum.begin(), spectrum.end(), field.begin());
    auto* p = reinterpret_cast<fftw_complex*>(field.data());
    fftw_execute_dft(plans_->inverse, p, p);
    const double scale = 1.0 / static_cast<double>(size_);
    for (auto& z : field) z *= scale;
}

Complex PeriodicGrid::integrate(std::span<const Complex> field) const {
    check_size(field.size());
    Complex s = 0.0;
    for (const auto& z : field) s += z;
    return s * cell_volume_;
}

double PeriodicGrid::integrate(std::span<const double> field) const {
    check_size(field.size());
    double s = 0.0;
    for (double v : field) s += v;
    return s * cell_volume_;
}

void PeriodicGrid::differentiate(std::span<const Complex> field, std::span<Complex> out, int order,
                                 int axis) const {
    if (order < 1) throw Error(ErrorKind::dimension, "derivative order must be positive");
    if (axis < 0 || axis >= dimension()) throw Error(ErrorKind::dimension, "axis out of range");
    forward(field, out);
    const std::size_t n_axis = axes_[axis].count;
    for (std::size_t i = 0; i < size_; ++i) {
        const double k = wavenumber(i, axis);
        const std::size_t slot = dimension() == 1 ? i : (axis == 0 ? i / axes_[1].count : i % axes_[1].count);
        if (order % 2 == 1 && slot == n_axis / 2) {
            out[i] = 0.0;
            continue;
        }
        out[i] *= std::pow(Complex(0.0, k), order);
    }
    inverse(out, out);
}

void PeriodicGrid::dealias(std::span<Complex> spectrum) const {
    check_size(spectrum.size());
    for (std::size_t i = 0; i < size_; ++i) {
        for (int a = 0; a < dimension(); ++a) {
            const double m = std::abs(wavenumber(i, a)) * axes_[a].length / (2.0 * std::numbers::pi);
            if (m > static_cast<double>(axes_[a].count) / 3.0) {
                spectrum[i] = 0.0;
                break;
            }
        }
    }
}

ChebyshevGrid::ChebyshevGrid(double left, double right, std::size_t n)
    : left_(left), right_(right), nodes_(n + 1), weights_(n + 1), diff_(n + 1, n + 1) {
    if (n < 2) throw Error(ErrorKind::dimension, "Chebyshev grid needs at least 2 intervals");
    if (!(right > left)) throw Error(ErrorKind::dimension, "Chebyshev interval must satisfy left < right");
    const double pi = std::numbers::pi;
    const double half = 0.5 * (right - left);
    const auto nd = static_cast<double>(n);

    std::vector<double> xi(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        xi[j] = std::cos(pi * static_cast<double>(j) / nd);
        nodes_[j] = left + (xi[j] + 1.0) * half;
    }

    // Differences via the product formula: xi_i - xi_j = 2 sin(pi(i+j)/2N) sin(pi(j-i)/2N).
    for (std::size_t i = 0; i <= n; ++i) {
        const double ci = (i == 0 || i == n) ? 2.0 : 1.0;
        double row_sum = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            if (i == j) continue;
            const double cj = (j == 0 || j == n) ? 2.0 : 1.0;
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            const double diff = 2.0 * std::sin(pi * static_cast<double>(i + j) / (2.0 * nd)) *
                                std::sin(pi * (static_cast<double>(j) - static_cast<double>(i)) / (2.0 * nd));
            const double d = sign * (ci / cj) / diff;
            diff_(i, j) = d;
            row_sum += d;
        }
        diff_(i, i) = -row_sum;
    }
    diff_ /= half;

    // Clenshaw-Curtis weights on [-1, 1].
    std::vector<double> w(n + 1, 0.0);
    std::vector<double> v(n > 1 ? n - 1 : 0, 1.0);
    std::vector<double> theta(n + 1);
    for (std::size_t j = 0; j <= n; ++j) theta[j] = pi * static_cast<double>(j) / nd;
    if (n % 2 == 0) {
        w[0] = w[n] = 1.0 / (nd * nd - 1.0);
        for (std::size_t k = 1; k < n / 2; ++k)
            for (std::size_t j = 1; j < n; ++j)
                v[j - 1] -= 2.0 * std::cos(2.0 * k * theta[j]) / (4.0 * k * k - 1.0);
        for (std::size_t j = 1; j < n; ++j) v[j - 1] -= std::cos(nd * theta[j]) / (nd * nd - 1.0);
    } else {
        w[0] = w[n] = 1.0 / (nd * nd);
        for (std::size_t k = 1; k <= (n - 1) / 2; ++k)
            for (std::size_t j = 1; j < n; ++j)
                v[j - 1] -= 2.0 * std::cos(2.0 * k * theta[j]) / (4.0 * k * k - 1.0);
    }
    for (std::size_t j = 1; j < n; ++j) w[j] = 2.0 * v[j - 1] / nd;
    for (std::size_t j = 0; j <= n; ++j) weights_[j] = w[j] * half;
}

void ChebyshevGrid::check_size(std::size_t n) const {
    if (n != nodes_.size()) throw Error(ErrorKind::dimension, "field length does not match grid");
}

Complex ChebyshevGrid::integrate(std::span<const Complex> field) const {
    check_size(field.size());
    Complex s = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) s += weights_[j] * field[j];
    return s;
}

double ChebyshevGrid::integrate(std::span<const double> field) const {
    check_size(field.size());
    double s = 0.0;
    for (std::size_t j = 0; j < field.size(); ++j) s += weights_[j] * field[j];
    return s;
}

void ChebyshevGrid::differentiate(std::span<const Complex> field, std::span<Complex> out,
                                  int order) const {
    if (order < 1) throw Error(ErrorKind::dimension, "derivative order must be positive");
    check_size(field.size());
    check_size(out.size());
    const auto n = static_cast<Eigen::Index>(field.size());
    Eigen::VectorXd re(n), im(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        re[j] = field[j].real();
        im[j] = field[j].imag();
    }
    for (int o = 0; o < order; ++o) {
        re = diff_ * re;
        im = diff_ * im;
    }
    for (Eigen::Index j = 0; j < n; ++j) out[j] = Complex(re[j], im[j]);
}

std::size_t grid_size(const SpatialGrid& grid) {
    return std::visit([](const auto& g) { return g.size(); }, grid);
}

Complex integrate(const SpatialGrid& grid, std::span<const Complex> field) {
    return std::visit([&](const auto& g) { return g.integrate(field); }, grid);
}

void differentiate(const SpatialGrid& grid, std::span<const Complex> field, std::span<Complex> out,
                   int order, int axis) {
    if (const auto* p = std::get_if<PeriodicGrid>(&grid)) {
        p->differentiate(field, out, order, axis);
    } else {
        if (axis != 0) throw Error(ErrorKind::dimension, "Chebyshev grids are one-dimensional");
        std::get<ChebyshevGrid>(grid).differentiate(field, out, order);
    }
}

std::vector<double> node_coordinates(const SpatialGrid& grid, int axis) {
    if (const auto* p = std::get_if<PeriodicGrid>(&grid)) {
        std::vector<double> x(p->size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = p->coordinate(i, axis);
        return x;
    }
    const auto nodes = std::get<ChebyshevGrid>(grid).nodes();
    return {nodes.begin(), nodes.end()};
}

const char* fft_backend_version() { return fftw_version; }

}  // namespace tdsr
