#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string_view>

namespace kgbohm {

using Vec3 = std::array<double, 3>;

/// Point or vector in Minkowski spacetime, contravariant components
/// (x^0, x^1, x^2, x^3). Natural units: hbar = c = 1, metric (+,-,-,-).
class FourVector {
public:
    constexpr FourVector() = default;
    /// Throws Error(NonFinite) for NaN or infinite components.
    FourVector(double c0, double c1, double c2, double c3);
    explicit FourVector(const std::array<double, 4>& c);

    static FourVector from_time_and_space(double t, const Vec3& x);

    double operator[](std::size_t mu) const { return c_[mu]; }
    const std::array<double, 4>& components() const { return c_; }
    double time() const { return c_[0]; }
    Vec3 spatial() const { return {c_[1], c_[2], c_[3]}; }

    FourVector operator+(const FourVector& o) const;
    FourVector operator-(const FourVector& o) const;
    FourVector operator-() const;
    FourVector operator*(double k) const;
    FourVector operator/(double k) const;
    friend FourVector operator*(double k, const FourVector& v) { return v * k; }

    bool operator==(const FourVector&) const = default;

    /// Euclidean norm of the component tuple; used for distances in R^4.
    double euclidean_norm() const;

private:
    struct Unchecked {};
    constexpr FourVector(Unchecked, const std::array<double, 4>& c) : c_(c) {}

    std::array<double, 4> c_{};
};

/// a^0 b^0 - a^1 b^1 - a^2 b^2 - a^3 b^3.
double minkowski_dot(const FourVector& a, const FourVector& b);

/// Complex contravariant vector, e.g. the gradient of a wave function.
using ComplexFourVector = std::array<std::complex<double>, 4>;

inline constexpr std::array<double, 4> kMetricDiagonal{1.0, -1.0, -1.0, -1.0};

enum class CausalClass { Timelike, Lightlike, Spacelike };

std::string_view to_string(CausalClass c);
/// Single-letter tag used in trajectory CSV files (T, L, S).
char causal_letter(CausalClass c);

/// Timelike if v.v > tol, Spacelike if v.v < -tol, Lightlike otherwise.
CausalClass causal_class(const FourVector& v, double tol);

/// Linear map on contravariant components, Lambda^mu_nu stored row-major.
/// Transformations are active: the map moves points and vectors while the
/// coordinate frame stays fixed.
class LorentzTransform {
public:
    using Matrix = std::array<std::array<double, 4>, 4>;

    static LorentzTransform identity();
    /// Active boost with velocity `beta`; sends (1,0,0,0) to gamma*(1, beta).
    /// Throws Error(SpeedNotSubluminal) if |beta| >= 1 - 1e-12.
    static LorentzTransform boost(const Vec3& beta);
    /// Throws Error(InvalidArgument) unless the matrix preserves the metric
    /// within 1e-12 entrywise.
    static LorentzTransform from_matrix(const Matrix& m);

    FourVector operator()(const FourVector& v) const;
    LorentzTransform operator*(const LorentzTransform& o) const;
    /// g Lambda^T g.
    LorentzTransform inverse() const;

    const Matrix& matrix() const { return m_; }
    double operator()(std::size_t row, std::size_t col) const { return m_[row][col]; }

    /// max_{mu,nu} |(Lambda^T g Lambda - g)_{mu nu}|.
    double metric_defect() const;

private:
    explicit LorentzTransform(const Matrix& m) : m_(m) {}
    Matrix m_{};
};

/// Flat spacelike hypersurface { x : n.x = offset } with unit, future
/// oriented timelike normal n.
///
/// Adapted coordinates: a point with spatial coordinates u is
/// B (offset, u) where B is the boost taking (1,0,0,0) to n. Because B is an
/// isometry, the induced metric in u is Euclidean and sqrt|g^(3)| = 1.
class Hypersurface {
public:
    /// Throws Error(NotUnitTimelike) unless n.n = 1 within 1e-12 and n^0 > 0.
    Hypersurface(const FourVector& normal, double offset);

    /// The surface t = time in the lab frame.
    static Hypersurface at_time(double time);
    /// Rest surface of an observer moving with velocity `beta`.
    static Hypersurface with_velocity(const Vec3& beta, double offset);

    const FourVector& normal() const { return normal_; }
    double offset() const { return offset_; }

    /// n.x - offset; positive on the future side.
    double signed_distance(const FourVector& x) const;
    FourVector embed(const Vec3& u) const;
    /// Adapted coordinates of the projection of x onto the surface.
    Vec3 coordinates(const FourVector& x) const;

private:
    FourVector normal_;
    double offset_;
    LorentzTransform frame_;
    LorentzTransform frame_inverse_;
};

double signed_distance(const Hypersurface& sigma, const FourVector& x);

}  // namespace kgbohm
