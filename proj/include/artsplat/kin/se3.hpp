#pragma once

#include <artsplat/core/common.hpp>

#include <array>

namespace artsplat {

struct RigidTransform {
  Mat3d rotation = Mat3d::Identity();
  Vec3d translation = Vec3d::Zero();

  Vec3d apply(const Vec3d& p) const { return rotation * p + translation; }

  RigidTransform compose(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  RigidTransform inverse() const {
    Mat3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  static RigidTransform identity() { return {}; }

  bool is_valid(double tol = 1e-9) const {
    const double ortho = (rotation.transpose() * rotation - Mat3d::Identity()).norm();
    return ortho <= tol * 10 && std::abs(rotation.determinant() - 1.0) <= tol * 10 &&
           translation.allFinite();
  }
};

inline Mat3d skew(const Vec3d& w) {
  Mat3d m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

inline Vec3d unskew(const Mat3d& m) {
  // Vee of the antisymmetric part; exact inverse of skew for skew inputs.
  return 0.5 * Vec3d{m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

// Coefficients of exp on se(3):
//   R = I + a1*K + a2*K^2,  V = I + a2*K + a3*K^2  (K = [w]x, theta = |w|)
// a2 uses the half-angle form so it stays accurate for small theta.
namespace detail {

struct ExpCoeffs {
  double theta, a1, a2, a3;
};

inline ExpCoeffs exp_coeffs(double theta) {
  ExpCoeffs c{};
  c.theta = theta;
  if (theta < 1e-8) {
    const double t2 = theta * theta;
    c.a1 = 1.0 - t2 / 6.0;
    c.a2 = 0.5 - t2 / 24.0;
    c.a3 = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double s = std::sin(theta);
    const double sh = std::sin(0.5 * theta);
    c.a1 = s / theta;
    c.a2 = 2.0 * sh * sh / (theta * theta);
    c.a3 = (theta - s) / (theta * theta * theta);
  }
  return c;
}

// d a2 / d theta and d a3 / d theta, with series fallbacks.
inline double exp_a2_prime(double theta) {
  if (theta < 1e-4) return -theta / 12.0 + theta * theta * theta / 180.0;
  const double s = std::sin(theta), ch = std::cos(theta);
  return (theta * s - 2.0 * (1.0 - ch)) / (theta * theta * theta);
}

inline double exp_a3_prime(double theta) {
  if (theta < 1e-4) return -theta / 60.0 + theta * theta * theta / 1260.0;
  const double s = std::sin(theta), ch = std::cos(theta);
  return (theta * (1.0 - ch) - 3.0 * (theta - s)) / (theta * theta * theta * theta);
}

}  // namespace detail

inline Mat3d so3_exp(const Vec3d& w) {
  const auto c = detail::exp_coeffs(w.norm());
  const Mat3d k = skew(w);
  return Mat3d::Identity() + c.a1 * k + c.a2 * (k * k);
}

// SO(3) left Jacobian; equals the V matrix of the SE(3) exponential.
inline Mat3d so3_left_jacobian(const Vec3d& w) {
  const auto c = detail::exp_coeffs(w.norm());
  const Mat3d k = skew(w);
  return Mat3d::Identity() + c.a2 * k + c.a3 * (k * k);
}

// Twist layout: xi = (v, w) with translation components first.
inline RigidTransform exp_se3(const Vec6d& xi) {
  if (!xi.allFinite()) throw ValidationError("exp_se3: non-finite twist");
  const Vec3d v = xi.head<3>();
  const Vec3d w = xi.tail<3>();
  RigidTransform t;
  t.rotation = so3_exp(w);
  t.translation = so3_left_jacobian(w) * v;
  return t;
}

inline Vec3d so3_log(const Mat3d& r) {
  const Vec3d u = unskew(r);  // sin(theta) * axis
  const double s = std::min(u.norm(), 1.0);
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  // atan2 stays well conditioned where acos degrades (theta near 0 or pi).
  const double theta = std::atan2(s, c);
  if (theta < 1e-8) {
    return u;  // log = u + O(theta^3)
  }
  if (theta > kPi - 1e-6) {
    // The antisymmetric part vanishes at pi; take the axis from the symmetric
    // part, where the outer product n n^T survives, and use u only for sign.
    const Mat3d b = 0.25 * (r + r.transpose()) + 0.5 * Mat3d::Identity();
    int i = 0;
    if (b(1, 1) > b(i, i)) i = 1;
    if (b(2, 2) > b(i, i)) i = 2;
    Vec3d axis = b.col(i) / std::sqrt(std::max(b(i, i), 1e-16));
    axis.normalize();
    if (u.dot(axis) < 0) axis = -axis;
    return theta * axis;
  }
  return (theta / s) * u;
}

inline Vec6d log_se3(const RigidTransform& t) {
  if (!t.is_valid(1e-8)) throw ValidationError("log_se3: input is not a rigid transform");
  const Vec3d w = so3_log(t.rotation);
  const double theta = w.norm();
  const Mat3d k = skew(w);
  Mat3d vinv;
  if (theta < 1e-8) {
    vinv = Mat3d::Identity() - 0.5 * k + (1.0 / 12.0) * (k * k);
  } else {
    // 1/theta^2 - cos(theta/2) / (2 theta sin(theta/2)); half-angle form is
    // stable through theta = pi.
    const double coef =
        1.0 / (theta * theta) - std::cos(0.5 * theta) / (2.0 * theta * std::sin(0.5 * theta));
    vinv = Mat3d::Identity() - 0.5 * k + coef * (k * k);
  }
  Vec6d xi;
  xi.head<3>() = vinv * t.translation;
  xi.tail<3>() = w;
  return xi;
}

// Exact derivatives of exp_se3(xi) w.r.t. each twist component, left-Jacobian
// convention: d exp / d w_k = [J_l(w) e_k]x R.
struct Se3ParamDerivs {
  RigidTransform value;
  std::array<Mat3d, 6> d_rotation;     // zero for the 3 translation components
  std::array<Vec3d, 6> d_translation;
};

inline Se3ParamDerivs exp_se3_derivs(const Vec6d& xi) {
  Se3ParamDerivs out;
  const Vec3d v = xi.head<3>();
  const Vec3d w = xi.tail<3>();
  const double theta = w.norm();
  const auto c = detail::exp_coeffs(theta);
  const Mat3d k = skew(w);
  const Mat3d k2 = k * k;
  const Mat3d r = Mat3d::Identity() + c.a1 * k + c.a2 * k2;
  const Mat3d vmat = Mat3d::Identity() + c.a2 * k + c.a3 * k2;
  out.value.rotation = r;
  out.value.translation = vmat * v;

  for (int i = 0; i < 3; ++i) {
    out.d_rotation[i].setZero();
    out.d_translation[i] = vmat.col(i);  // d(V v)/d v_k
  }
  const double a2p = detail::exp_a2_prime(theta);
  const double a3p = detail::exp_a3_prime(theta);
  for (int i = 0; i < 3; ++i) {
    Vec3d e = Vec3d::Zero();
    e[i] = 1.0;
    out.d_rotation[3 + i] = skew(vmat * e) * r;
    const double dtheta = theta > 1e-12 ? w[i] / theta : 0.0;
    const Mat3d ek = skew(e);
    const Mat3d dv = a2p * dtheta * k + c.a2 * ek + a3p * dtheta * k2 + c.a3 * (ek * k + k * ek);
    out.d_translation[3 + i] = dv * v;
  }
  return out;
}

// Quaternion helpers; storage order (w, x, y, z), canonical sign w >= 0.
inline Mat3d quat_to_mat(const Vec4d& q) {
  // Homogeneous form: exact rotation for any nonzero quaternion, so f32
  // storage and optimizer drift away from unit norm do not distort it.
  const double n2 = q.squaredNorm();
  const double s = n2 > 0 ? 2.0 / n2 : 0.0;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3d m;
  m << 1 - s * (y * y + z * z), s * (x * y - z * w), s * (x * z + y * w),
      s * (x * y + z * w), 1 - s * (x * x + z * z), s * (y * z - x * w),
      s * (x * z - y * w), s * (y * z + x * w), 1 - s * (x * x + y * y);
  return m;
}

inline Vec4d mat_to_quat(const Mat3d& m) {
  Eigen::Quaterniond q(m);
  Vec4d out(q.w(), q.x(), q.y(), q.z());
  if (out[0] < 0) out = -out;
  return out;
}

inline Vec4d quat_mul(const Vec4d& a, const Vec4d& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

inline Vec4d quat_canonical(Vec4d q) {
  q.normalize();
  if (q[0] < 0) q = -q;
  return q;
}

}  // namespace artsplat
