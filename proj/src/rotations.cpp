#include "rcpose/rotations.hpp"

#include <algorithm>
#include <cmath>

#include "rcpose/errors.hpp"

namespace rcpose {

namespace {

Eigen::Quaterniond Canonical(Eigen::Quaterniond q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

}  // namespace

Rotation::Rotation(const Eigen::Quaterniond& unit_q) : q_(Canonical(unit_q)) {}

Rotation Rotation::FromQuaternion(double w, double x, double y, double z) {
  const double n2 = w * w + x * x + y * y + z * z;
  if (!std::isfinite(n2) || n2 < 1e-300) {
    throw InvalidArgument("quaternion must be finite and non-zero");
  }
  return Rotation(Eigen::Quaterniond(w, x, y, z));
}

Rotation Rotation::FromQuaternion(const Eigen::Quaterniond& q) {
  return FromQuaternion(q.w(), q.x(), q.y(), q.z());
}

Rotation Rotation::FromMatrix(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw InvalidArgument("rotation matrix is not finite");
  return FromQuaternion(Eigen::Quaterniond(m));
}

Rotation Rotation::FromAxisAngle(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(angle)) {
    throw InvalidArgument("axis must be non-zero and angle finite");
  }
  return Exp(axis / n * angle);
}

Rotation Rotation::Exp(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  const double half = 0.5 * theta;
  double w;
  double k;  // sin(theta/2) / theta
  if (theta < 1e-8) {
    w = 1.0 - theta * theta / 8.0;
    k = 0.5 - theta * theta / 48.0;
  } else {
    w = std::cos(half);
    k = std::sin(half) / theta;
  }
  return Rotation(Eigen::Quaterniond(w, k * omega.x(), k * omega.y(), k * omega.z()));
}

Rotation Rotation::AboutX(double angle) { return Exp(Eigen::Vector3d::UnitX() * angle); }
Rotation Rotation::AboutY(double angle) { return Exp(Eigen::Vector3d::UnitY() * angle); }
Rotation Rotation::AboutZ(double angle) { return Exp(Eigen::Vector3d::UnitZ() * angle); }

Eigen::Vector3d Rotation::Log() const {
  const Eigen::Vector3d v = q_.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v / q_.w();
  const double theta = 2.0 * std::atan2(s, q_.w());
  return v * (theta / s);
}

Rotation Rotation::inverse() const { return Rotation(q_.conjugate()); }

Rotation Rotation::operator*(const Rotation& rhs) const {
  return Rotation(q_ * rhs.q_);
}

std::array<double, 9> Rotation::RowMajor() const {
  const Eigen::Matrix3d m = matrix();
  return {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1),
          m(1, 2), m(2, 0), m(2, 1), m(2, 2)};
}

Rotation FromEuler(const EulerAngles& e) {
  return Rotation::AboutZ(e.gamma) * Rotation::AboutY(e.beta) *
         Rotation::AboutX(e.alpha);
}

EulerAngles ToEuler(const Rotation& r) {
  const Eigen::Matrix3d m = r.matrix();
  EulerAngles e;
  e.beta = std::atan2(-m(2, 0), std::hypot(m(0, 0), m(1, 0)));
  e.gamma = std::atan2(m(1, 0), m(0, 0));
  e.alpha = std::atan2(m(2, 1), m(2, 2));
  return e;
}

void LatticeSpec::Validate() const {
  if (viewpoints < 1 || inplane < 1) {
    throw InvalidArgument("lattice needs at least one viewpoint and one in-plane angle");
  }
}

double GeodesicDistance(const Rotation& a, const Rotation& b) {
  // Same angle as arccos((tr(a^T b) - 1) / 2), but well conditioned near 0 and pi.
  const Eigen::Quaterniond r = a.quaternion().conjugate() * b.quaternion();
  return 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
}

std::vector<Eigen::Vector3d> FibonacciViewpoints(int m) {
  if (m < 1) throw InvalidArgument("FibonacciViewpoints: m must be >= 1");
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / m;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

Rotation ViewpointRotation(const Eigen::Vector3d& direction) {
  const double n = direction.norm();
  if (!(n > 0.0)) throw InvalidArgument("view direction must be non-zero");
  const Eigen::Vector3d z = direction / n;
  Eigen::Vector3d up = Eigen::Vector3d::UnitY();
  if (std::abs(z.dot(up)) > 1.0 - 1e-9) up = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d x = up.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d frame;
  frame.col(0) = x;
  frame.col(1) = y;
  frame.col(2) = z;
  return Rotation::FromMatrix(frame.transpose());
}

std::vector<Rotation> CandidatePoses(const LatticeSpec& spec) {
  spec.Validate();
  const auto views = FibonacciViewpoints(spec.viewpoints);
  std::vector<Rotation> poses;
  poses.reserve(static_cast<std::size_t>(spec.total()));
  for (const auto& d : views) {
    const Rotation align = ViewpointRotation(d);
    for (int k = 0; k < spec.inplane; ++k) {
      poses.push_back(Rotation::AboutZ(2.0 * kPi * k / spec.inplane) * align);
    }
  }
  return poses;
}

double InplaneOmittedDistance(const Rotation& a, const Rotation& b) {
  EulerAngles ea = ToEuler(a);
  EulerAngles eb = ToEuler(b);
  ea.gamma = 0.0;
  eb.gamma = 0.0;
  return GeodesicDistance(FromEuler(ea), FromEuler(eb));
}

Rotation LocalRetract(const Rotation& p, const Eigen::Vector3d& delta) {
  return Rotation::Exp(delta) * p;
}

}  // namespace rcpose
