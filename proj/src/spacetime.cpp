#include "kgbohm/spacetime.hpp"

#include <cmath>
#include <sstream>

#include "kgbohm/error.hpp"

namespace kgbohm {

namespace {

void require_finite(const std::array<double, 4>& c)
{
    for (double v : c) {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "four-vector component is not finite: (" << c[0] << ", " << c[1] << ", "
               << c[2] << ", " << c[3] << ")";
            fail(ErrorCode::NonFinite, os.str());
        }
    }
}

}  // namespace

FourVector::FourVector(double c0, double c1, double c2, double c3) : c_{c0, c1, c2, c3}
{
    require_finite(c_);
}

FourVector::FourVector(const std::array<double, 4>& c) : c_(c) { require_finite(c_); }

FourVector FourVector::from_time_and_space(double t, const Vec3& x)
{
    return FourVector(t, x[0], x[1], x[2]);
}

FourVector FourVector::operator+(const FourVector& o) const
{
    return {Unchecked{}, {c_[0] + o.c_[0], c_[1] + o.c_[1], c_[2] + o.c_[2], c_[3] + o.c_[3]}};
}

FourVector FourVector::operator-(const FourVector& o) const
{
    return {Unchecked{}, {c_[0] - o.c_[0], c_[1] - o.c_[1], c_[2] - o.c_[2], c_[3] - o.c_[3]}};
}

FourVector FourVector::operator-() const
{
    return {Unchecked{}, {-c_[0], -c_[1], -c_[2], -c_[3]}};
}

FourVector FourVector::operator*(double k) const
{
    return {Unchecked{}, {c_[0] * k, c_[1] * k, c_[2] * k, c_[3] * k}};
}

FourVector FourVector::operator/(double k) const
{
    return {Unchecked{}, {c_[0] / k, c_[1] / k, c_[2] / k, c_[3] / k}};
}

double FourVector::euclidean_norm() const
{
    return std::sqrt(c_[0] * c_[0] + c_[1] * c_[1] + c_[2] * c_[2] + c_[3] * c_[3]);
}

double minkowski_dot(const FourVector& a, const FourVector& b)
{
    return a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
}

std::string_view to_string(CausalClass c)
{
    switch (c) {
    case CausalClass::Timelike: return "timelike";
    case CausalClass::Lightlike: return "lightlike";
    case CausalClass::Spacelike: return "spacelike";
    }
    return "unknown";
}

char causal_letter(CausalClass c)
{
    switch (c) {
    case CausalClass::Timelike: return 'T';
    case CausalClass::Lightlike: return 'L';
    case CausalClass::Spacelike: return 'S';
    }
    return '?';
}

CausalClass causal_class(const FourVector& v, double tol)
{
    if (tol < 0) {
        fail(ErrorCode::InvalidArgument, "causal_class tolerance must be nonnegative");
    }
    const double norm2 = minkowski_dot(v, v);
    if (norm2 > tol) {
        return CausalClass::Timelike;
    }
    if (norm2 < -tol) {
        return CausalClass::Spacelike;
    }
    return CausalClass::Lightlike;
}

LorentzTransform LorentzTransform::identity()
{
    Matrix m{};
    for (std::size_t i = 0; i < 4; ++i) {
        m[i][i] = 1.0;
    }
    return LorentzTransform(m);
}

LorentzTransform LorentzTransform::boost(const Vec3& beta)
{
    for (double b : beta) {
        if (!std::isfinite(b)) {
            fail(ErrorCode::NonFinite, "boost velocity is not finite");
        }
    }
    const double b2 = beta[0] * beta[0] + beta[1] * beta[1] + beta[2] * beta[2];
    const double speed = std::sqrt(b2);
    if (speed >= 1.0 - 1e-12) {
        std::ostringstream os;
        os << "boost speed " << speed << " is not below 1 - 1e-12";
        fail(ErrorCode::SpeedNotSubluminal, os.str());
    }
    if (b2 == 0.0) {
        return identity();
    }
    const double gamma = 1.0 / std::sqrt(1.0 - b2);
    // (gamma - 1)/b2 written to avoid cancellation at small speeds.
    const double k = gamma * gamma / (1.0 + gamma);
    Matrix m{};
    m[0][0] = gamma;
    for (std::size_t i = 0; i < 3; ++i) {
        m[0][i + 1] = gamma * beta[i];
        m[i + 1][0] = gamma * beta[i];
        for (std::size_t j = 0; j < 3; ++j) {
            m[i + 1][j + 1] = (i == j ? 1.0 : 0.0) + k * beta[i] * beta[j];
        }
    }
    return LorentzTransform(m);
}

LorentzTransform LorentzTransform::from_matrix(const Matrix& m)
{
    LorentzTransform t(m);
    for (const auto& row : m) {
        for (double v : row) {
            if (!std::isfinite(v)) {
                fail(ErrorCode::NonFinite, "Lorentz matrix entry is not finite");
            }
        }
    }
    if (t.metric_defect() > 1e-12) {
        fail(ErrorCode::InvalidArgument, "matrix does not preserve the Minkowski metric");
    }
    return t;
}

FourVector LorentzTransform::operator()(const FourVector& v) const
{
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        out[i] = m_[i][0] * v[0] + m_[i][1] * v[1] + m_[i][2] * v[2] + m_[i][3] * v[3];
    }
    return FourVector(out);
}

LorentzTransform LorentzTransform::operator*(const LorentzTransform& o) const
{
    Matrix out{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                s += m_[i][k] * o.m_[k][j];
            }
            out[i][j] = s;
        }
    }
    return LorentzTransform(out);
}

LorentzTransform LorentzTransform::inverse() const
{
    Matrix out{};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            out[i][j] = kMetricDiagonal[i] * m_[j][i] * kMetricDiagonal[j];
        }
    }
    return LorentzTransform(out);
}

double LorentzTransform::metric_defect() const
{
    double worst = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                s += m_[k][i] * kMetricDiagonal[k] * m_[k][j];
            }
            const double target = i == j ? kMetricDiagonal[i] : 0.0;
            worst = std::max(worst, std::abs(s - target));
        }
    }
    return worst;
}

Hypersurface::Hypersurface(const FourVector& normal, double offset)
    : normal_(normal),
      offset_(offset),
      frame_(LorentzTransform::identity()),
      frame_inverse_(LorentzTransform::identity())
{
    if (!std::isfinite(offset)) {
        fail(ErrorCode::NonFinite, "hypersurface offset is not finite");
    }
    const double nn = minkowski_dot(normal, normal);
    if (std::abs(nn - 1.0) > 1e-12 || normal[0] <= 0.0) {
        std::ostringstream os;
        os.precision(17);
        os << "hypersurface normal must be unit timelike and future oriented (n.n = " << nn
           << ", n^0 = " << normal[0] << ")";
        fail(ErrorCode::NotUnitTimelike, os.str());
    }
    frame_ = LorentzTransform::boost({normal[1] / normal[0], normal[2] / normal[0],
                                      normal[3] / normal[0]});
    frame_inverse_ = frame_.inverse();
}

Hypersurface Hypersurface::at_time(double time)
{
    return Hypersurface(FourVector(1.0, 0.0, 0.0, 0.0), time);
}

Hypersurface Hypersurface::with_velocity(const Vec3& beta, double offset)
{
    const LorentzTransform b = LorentzTransform::boost(beta);
    return Hypersurface(b(FourVector(1.0, 0.0, 0.0, 0.0)), offset);
}

double Hypersurface::signed_distance(const FourVector& x) const
{
    return minkowski_dot(normal_, x) - offset_;
}

FourVector Hypersurface::embed(const Vec3& u) const
{
    return frame_(FourVector(offset_, u[0], u[1], u[2]));
}

Vec3 Hypersurface::coordinates(const FourVector& x) const
{
    const FourVector local = frame_inverse_(x);
    return {local[1], local[2], local[3]};
}

double signed_distance(const Hypersurface& sigma, const FourVector& x)
{
    return sigma.signed_distance(x);
}

}  // namespace kgbohm
