#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace rcpose {

// Element of SO(3), stored as a unit quaternion with w >= 0.
class Rotation {
 public:
  Rotation() = default;

  // Normalizes the input; throws InvalidArgument on a zero or non-finite
  // quaternion.
  static Rotation FromQuaternion(double w, double x, double y, double z);
  static Rotation FromQuaternion(const Eigen::Quaterniond& q);
  // Nearest rotation to `m` (via quaternion extraction + normalization).
  static Rotation FromMatrix(const Eigen::Matrix3d& m);
  static Rotation FromAxisAngle(const Eigen::Vector3d& axis, double angle);
  // Exponential map of a rotation vector (axis * angle, radians).
  static Rotation Exp(const Eigen::Vector3d& omega);
  static Rotation AboutX(double angle);
  static Rotation AboutY(double angle);
  static Rotation AboutZ(double angle);

  const Eigen::Quaterniond& quaternion() const noexcept { return q_; }
  Eigen::Matrix3d matrix() const { return q_.toRotationMatrix(); }
  // Rotation vector with norm in [0, pi].
  Eigen::Vector3d Log() const;

  Rotation inverse() const;
  Rotation operator*(const Rotation& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return q_ * v; }

  // Row-major 3x3 matrix entries.
  std::array<double, 9> RowMajor() const;

 private:
  explicit Rotation(const Eigen::Quaterniond& unit_q);
  Eigen::Quaterniond q_ = Eigen::Quaterniond::Identity();
};

// Euler angles, radians, ZYX composition: R = Rz(gamma) * Ry(beta) * Rx(alpha).
// gamma is the rotation about the camera optical axis (in-plane); the
// representation is singular at |beta| = pi/2.
struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

Rotation FromEuler(const EulerAngles& e);
EulerAngles ToEuler(const Rotation& r);

// Viewpoint lattice size: m directions times n in-plane angles.
struct LatticeSpec {
  int viewpoints = 200;
  int inplane = 20;
  void Validate() const;
  int total() const { return viewpoints * inplane; }
};

// Angle of a^T b in [0, pi], i.e. arccos((tr(a^T b) - 1) / 2), evaluated as
// 2 atan2(|v|, |w|) of the relative quaternion.
double GeodesicDistance(const Rotation& a, const Rotation& b);

// m unit directions, z uniformly spaced in (-1, 1), golden-angle azimuths.
std::vector<Eigen::Vector3d> FibonacciViewpoints(int m);

// Rotation that carries the view direction onto the camera axis (0,0,1),
// with the in-plane gauge fixed by world-up (0,1,0) projected onto the view
// plane (world-x near the poles). Identity for (0,0,1).
Rotation ViewpointRotation(const Eigen::Vector3d& direction);

// All m*n candidates, viewpoint-major:
// candidate[v*n + k] = Rz(2*pi*k/n) * ViewpointRotation(view[v]).
std::vector<Rotation> CandidatePoses(const LatticeSpec& spec);

// Geodesic distance after zeroing the in-plane Euler angle of both inputs.
double InplaneOmittedDistance(const Rotation& a, const Rotation& b);

// exp([delta]x) * p.
Rotation LocalRetract(const Rotation& p, const Eigen::Vector3d& delta);

constexpr double kPi = 3.14159265358979323846;
constexpr double DegToRad(double deg) { return deg * kPi / 180.0; }
constexpr double RadToDeg(double rad) { return rad * 180.0 / kPi; }

}  // namespace rcpose
