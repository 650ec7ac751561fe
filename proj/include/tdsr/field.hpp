#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tdsr {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

/// One quantity sampled on every grid point at every time level of a block.
/// Storage is time-major: level i occupies [i*points, (i+1)*points).
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(std::size_t levels, std::size_t points)
        : levels_(levels), points_(points), data_(levels * points) {}

    std::size_t levels() const noexcept { return levels_; }
    std::size_t points() const noexcept { return points_; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<Complex> level(std::size_t i) { return {data_.data() + i * points_, points_}; }
    std::span<const Complex> level(std::size_t i) const {
        return {data_.data() + i * points_, points_};
    }

    std::span<Complex> flat() { return data_; }
    std::span<const Complex> flat() const { return data_; }

    void fill(Complex value) { std::fill(data_.begin(), data_.end(), value); }

private:
    std::size_t levels_ = 0;
    std::size_t points_ = 0;
    std::vector<Complex> data_;
};

inline double max_abs(std::span<const Complex> a) {
    double m = 0.0;
    for (const auto& z : a) m = std::max(m, std::abs(z));
    return m;
}

inline double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline void drop_imaginary(std::span<Complex> a) {
    for (auto& z : a) z.imag(0.0);
}

}  // namespace tdsr
