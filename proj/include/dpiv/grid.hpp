#pragma once

// Raster containers, sub-pixel samplers and pull-back warping.
//
// Pixel centres sit at integer coordinates, x in [0, width-1] and
// y in [0, height-1]. Storage is row-major. Out-of-domain reads clamp to the
// nearest edge pixel for every sampler in this header.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dpiv {

/// Base error for every failure raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;

    double norm() const { return std::hypot(x, y); }
};

/// Single-channel real raster. Used for recordings, warped images and
/// scalar diagnostic maps alike.
template <class T>
class Raster {
  public:
    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height) {
        if (width < 1 || height < 1)
            throw Error("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }
    Raster(int width, int height, std::vector<T> data) : Raster(width, height) {
        if (data.size() != data_.size())
            throw Error("raster data length does not match width*height");
        data_ = std::move(data);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }

    /// Clamp-to-edge access.
    const T& at_clamped(int x, int y) const {
        return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    friend bool operator==(const Raster&, const Raster&) = default;

  private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ScalarImage = Raster<double>;

struct velocity_tag {};
struct deformation_tag {};

/// Dense two-component raster. The tag separates velocity fields (pixel per
/// frame) from deformation fields (cumulative displacement over one frame
/// interval) so the two cannot be mixed up by accident.
template <class Tag>
class Field2 {
  public:
    Field2() = default;
    Field2(int width, int height, Vec2 fill = {})
        : u_(width, height, fill.x), v_(width, height, fill.y) {}
    Field2(Raster<double> u, Raster<double> v) : u_(std::move(u)), v_(std::move(v)) {
        if (u_.width() != v_.width() || u_.height() != v_.height())
            throw Error("field component rasters differ in shape");
    }

    int width() const { return u_.width(); }
    int height() const { return u_.height(); }
    std::size_t size() const { return u_.size(); }

    Vec2 operator()(int x, int y) const { return {u_(x, y), v_(x, y)}; }
    void set(int x, int y, Vec2 value) {
        u_(x, y) = value.x;
        v_(x, y) = value.y;
    }

    Raster<double>& u() { return u_; }
    Raster<double>& v() { return v_; }
    const Raster<double>& u() const { return u_; }
    const Raster<double>& v() const { return v_; }

    friend bool operator==(const Field2&, const Field2&) = default;

  private:
    Raster<double> u_;
    Raster<double> v_;
};

using VectorField = Field2<velocity_tag>;
using DeformationField = Field2<deformation_tag>;

template <class To, class From>
Field2<To> retag(Field2<From> f) {
    return Field2<To>(std::move(f.u()), std::move(f.v()));
}

inline DeformationField as_deformation(VectorField f) { return retag<deformation_tag>(std::move(f)); }
inline VectorField as_velocity(DeformationField f) { return retag<velocity_tag>(std::move(f)); }

template <class A, class B>
bool same_shape(const A& a, const B& b) {
    return a.width() == b.width() && a.height() == b.height();
}

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (!same_shape(a, b))
        throw Error(std::string(what) + ": shape mismatch (" + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + ")");
}

template <class T>
bool all_finite(const Raster<T>& r) {
    return std::all_of(r.data().begin(), r.data().end(), [](double x) { return std::isfinite(x); });
}

template <class Tag>
bool all_finite(const Field2<Tag>& f) {
    return all_finite(f.u()) && all_finite(f.v());
}

template <class Tag>
double max_magnitude(const Field2<Tag>& f) {
    double m = 0.0;
    const auto& u = f.u().data();
    const auto& v = f.v().data();
    for (std::size_t i = 0; i < u.size(); ++i)
        m = std::max(m, std::hypot(u[i], v[i]));
    return m;
}

namespace detail {

// Lower corner index and fraction for linear interpolation along one axis,
// with the coordinate clamped into [0, n-1].
inline std::pair<int, double> linear_cell(double c, int n) {
    if (n == 1)
        return {0, 0.0};
    c = std::clamp(c, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(std::floor(c)), n - 2);
    return {i, c - i};
}

} // namespace detail

// Lerp form a + f*(b - a): exact wherever neighbouring values are equal, so
// constant rasters sample to themselves bit-for-bit.
inline double sample_bilinear(const Raster<double>& img, double x, double y) {
    auto [ix, fx] = detail::linear_cell(x, img.width());
    auto [iy, fy] = detail::linear_cell(y, img.height());
    const int ix1 = std::min(ix + 1, img.width() - 1);
    const int iy1 = std::min(iy + 1, img.height() - 1);
    const double top = img(ix, iy) + fx * (img(ix1, iy) - img(ix, iy));
    const double bottom = img(ix, iy1) + fx * (img(ix1, iy1) - img(ix, iy1));
    return top + fy * (bottom - top);
}

template <class Tag>
Vec2 sample_bilinear(const Field2<Tag>& f, double x, double y) {
    return {sample_bilinear(f.u(), x, y), sample_bilinear(f.v(), x, y)};
}

/// Catmull-Rom weights for taps at offsets -1, 0, 1, 2 from the lower
/// neighbour, given the fractional position t in [0, 1).
inline std::array<double, 4> cubic_weights(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2)};
}

/// Bicubic sample with source indices clamped to the raster. The result is
/// not clamped to the input range.
inline double sample_bicubic(const Raster<double>& img, double x, double y) {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto wx = cubic_weights(x - fx);
    const auto wy = cubic_weights(y - fy);
    // Far outside the raster every tap clamps to the same edge pixel.
    const int ix = static_cast<int>(std::clamp(fx, -4.0, static_cast<double>(img.width() + 4)));
    const int iy = static_cast<int>(std::clamp(fy, -4.0, static_cast<double>(img.height() + 4)));
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        const int yy = std::clamp(iy - 1 + j, 0, img.height() - 1);
        double row = 0.0;
        for (int i = 0; i < 4; ++i)
            row += wx[i] * img(std::clamp(ix - 1 + i, 0, img.width() - 1), yy);
        acc += wy[j] * row;
    }
    return acc;
}

namespace detail {

// Causal then anticausal recursion for one pole z of a B-spline prefilter,
// over n samples spaced `stride` apart with mirror boundaries. The gain is
// applied by the caller.
inline void bspline_pole(double* c, int n, std::ptrdiff_t stride, double z) {
    auto at = [&](int i) -> double& { return c[i * stride]; };
    // Beyond `horizon` terms |z|^k < 1e-17 and the mirrored sum is truncated.
    const int horizon = static_cast<int>(std::ceil(std::log(1e-17) / std::log(std::abs(z))));
    double z_k = z;
    double sum = at(0);
    if (n < horizon) {
        const double inv_z = 1.0 / z;
        double z_2n = std::pow(z, n - 1);
        sum += z_2n * at(n - 1);
        z_2n *= z_2n * inv_z;
        for (int k = 1; k < n - 1; ++k) {
            sum += (z_k + z_2n) * at(k);
            z_k *= z;
            z_2n *= inv_z;
        }
        sum /= 1.0 - z_k * z_k;
    } else {
        for (int k = 1; k < horizon; ++k) {
            sum += z_k * at(k);
            z_k *= z;
        }
    }
    at(0) = sum;
    for (int i = 1; i < n; ++i)
        at(i) += z * at(i - 1);
    at(n - 1) = z / (z * z - 1.0) * (at(n - 1) + z * at(n - 2));
    for (int i = n - 2; i >= 0; --i)
        at(i) = z * (at(i + 1) - at(i));
}

// In-place B-spline prefilter (degree 3 or 5). Afterwards the spline with
// these coefficients passes through the original samples.
inline void bspline_prefilter(double* c, int n, std::ptrdiff_t stride, int degree = 3) {
    if (n < 2)
        return;
    static const double cubic[] = {std::sqrt(3.0) - 2.0};
    static const double quintic[] = {std::sqrt(135.0 / 2.0 - std::sqrt(17745.0 / 4.0)) + std::sqrt(105.0 / 4.0) - 6.5,
                                     std::sqrt(135.0 / 2.0 + std::sqrt(17745.0 / 4.0)) - std::sqrt(105.0 / 4.0) - 6.5};
    const std::span<const double> poles = degree == 5 ? std::span<const double>(quintic) : std::span<const double>(cubic);
    double gain = 1.0;
    for (double z : poles)
        gain *= (1.0 - z) * (1.0 - 1.0 / z);
    for (int i = 0; i < n; ++i)
        c[i * stride] *= gain;
    for (double z : poles)
        bspline_pole(c, n, stride, z);
}

inline int mirror_index(int i, int n) {
    if (n == 1)
        return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - i;
}

inline std::array<double, 4> bspline_weights(double t) {
    const double s = 1.0 - t;
    return {s * s * s / 6.0, (4.0 - 6.0 * t * t + 3.0 * t * t * t) / 6.0,
            (1.0 + 3.0 * t + 3.0 * t * t - 3.0 * t * t * t) / 6.0, t * t * t / 6.0};
}

inline double bspline5(double x) {
    x = std::abs(x);
    const double x2 = x * x;
    if (x < 1.0)
        return 11.0 / 20.0 - x2 / 2.0 + x2 * x2 / 4.0 - x2 * x2 * x / 12.0;
    if (x < 2.0)
        return 17.0 / 40.0 + 5.0 * x / 8.0 - 7.0 * x2 / 4.0 + 5.0 * x2 * x / 4.0 - 3.0 * x2 * x2 / 8.0 +
               x2 * x2 * x / 24.0;
    if (x < 3.0) {
        const double s = 3.0 - x;
        return s * s * s * s * s / 120.0;
    }
    return 0.0;
}

// Taps at offsets -2 .. 3 from the lower neighbour.
inline std::array<double, 6> bspline5_weights(double t) {
    return {bspline5(t + 2.0), bspline5(t + 1.0), bspline5(t), bspline5(t - 1.0), bspline5(t - 2.0), bspline5(t - 3.0)};
}

} // namespace detail

/// Interpolation coefficients of `img` for sample_bspline (degree 3) or
/// sample_bspline5 (degree 5).
inline Raster<double> bspline_coefficients(Raster<double> img, int degree = 3) {
    if (degree != 3 && degree != 5)
        throw Error("bspline_coefficients: degree must be 3 or 5");
    const int w = img.width();
    const int h = img.height();
    double* d = img.data().data();
    for (int y = 0; y < h; ++y)
        detail::bspline_prefilter(d + static_cast<std::ptrdiff_t>(y) * w, w, 1, degree);
    for (int x = 0; x < w; ++x)
        detail::bspline_prefilter(d + x, h, w, degree);
    return img;
}

/// Interpolating cubic B-spline sample from prefiltered coefficients. The
/// coordinate is clamped to the raster, so outside reads return edge values.
inline double sample_bspline(const Raster<double>& coeffs, double x, double y) {
    x = std::clamp(x, 0.0, coeffs.width() - 1.0);
    y = std::clamp(y, 0.0, coeffs.height() - 1.0);
    const int ix = static_cast<int>(std::floor(x));
    const int iy = static_cast<int>(std::floor(y));
    const auto wx = detail::bspline_weights(x - ix);
    const auto wy = detail::bspline_weights(y - iy);
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        const int yy = detail::mirror_index(iy - 1 + j, coeffs.height());
        double row = 0.0;
        for (int i = 0; i < 4; ++i)
            row += wx[i] * coeffs(detail::mirror_index(ix - 1 + i, coeffs.width()), yy);
        acc += wy[j] * row;
    }
    return acc;
}

/// Interpolating quintic B-spline sample from degree-5 coefficients, clamped
/// like sample_bspline.
inline double sample_bspline5(const Raster<double>& coeffs, double x, double y) {
    x = std::clamp(x, 0.0, coeffs.width() - 1.0);
    y = std::clamp(y, 0.0, coeffs.height() - 1.0);
    const int ix = static_cast<int>(std::floor(x));
    const int iy = static_cast<int>(std::floor(y));
    const auto wx = detail::bspline5_weights(x - ix);
    const auto wy = detail::bspline5_weights(y - iy);
    double acc = 0.0;
    for (int j = 0; j < 6; ++j) {
        const int yy = detail::mirror_index(iy - 2 + j, coeffs.height());
        double row = 0.0;
        for (int i = 0; i < 6; ++i)
            row += wx[i] * coeffs(detail::mirror_index(ix - 2 + i, coeffs.width()), yy);
        acc += wy[j] * row;
    }
    return acc;
}

/// Image interpolants available to warp_image. All pass through the samples.
/// Phase error at fractional offsets on particle images falls from
/// Catmull-Rom to the cubic to the quintic B-spline.
enum class Interpolation { catmull_rom, cubic_bspline, quintic_bspline };

/// Pull-back warp: out(x) = img(x + disp(x)).
template <class Tag>
ScalarImage warp_image(const ScalarImage& img, const Field2<Tag>& disp,
                       Interpolation kind = Interpolation::catmull_rom) {
    require_same_shape(img, disp, "warp_image");
    ScalarImage out(img.width(), img.height());
    if (kind == Interpolation::catmull_rom) {
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                out(x, y) = sample_bicubic(img, x + disp.u()(x, y), y + disp.v()(x, y));
        return out;
    }
    if (kind == Interpolation::quintic_bspline) {
        const Raster<double> coeffs = bspline_coefficients(img, 5);
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                out(x, y) = sample_bspline5(coeffs, x + disp.u()(x, y), y + disp.v()(x, y));
        return out;
    }
    const Raster<double> coeffs = bspline_coefficients(img);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out(x, y) = sample_bspline(coeffs, x + disp.u()(x, y), y + disp.v()(x, y));
    return out;
}

template <class Tag>
Field2<Tag> scale_field(const Field2<Tag>& f, double s) {
    Field2<Tag> out = f;
    for (auto& x : out.u().data())
        x *= s;
    for (auto& x : out.v().data())
        x *= s;
    return out;
}

template <class Tag>
Field2<Tag> add_fields(const Field2<Tag>& a, const Field2<Tag>& b) {
    require_same_shape(a, b, "add_fields");
    Field2<Tag> out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.u().data()[i] += b.u().data()[i];
        out.v().data()[i] += b.v().data()[i];
    }
    return out;
}

/// Separable Gaussian smoothing with clamp-to-edge boundaries. sigma <= 0 is
/// the identity.
inline Raster<double> gaussian_blur(const Raster<double>& img, double sigma) {
    if (sigma <= 0.0)
        return img;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i)
        sum += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& k : kernel)
        k /= sum;

    Raster<double> tmp(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at_clamped(x + i, y);
            tmp(x, y) = acc;
        }
    Raster<double> out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at_clamped(x, y + i);
            out(x, y) = acc;
        }
    return out;
}

template <class Tag>
Field2<Tag> gaussian_blur(const Field2<Tag>& f, double sigma) {
    return Field2<Tag>(gaussian_blur(f.u(), sigma), gaussian_blur(f.v(), sigma));
}

} // namespace dpiv
