#pragma once

#include <artsplat/core/types.hpp>
#include <artsplat/kin/se3.hpp>
#include <artsplat/render/projection.hpp>

#include <Eigen/Dense>

#include <utility>
#include <vector>

namespace artsplat {

struct PnpResult {
  RigidTransform T;             // cam_T_shaft
  double reproj_rmse = 0;       // pixels
  bool low_confidence = false;
};

// DLT + Gauss-Newton. Correspondences pair image pixels with shaft-frame
// points; at least 6 non-degenerate pairs are required.
inline PnpResult pnp_solve(const std::vector<std::pair<Vec2d, Vec3d>>& corr, const Camera& cam,
                           double confidence_rmse_px = 5.0) {
  const int n = int(corr.size());
  if (n < 6) throw ValidationError("pnp_solve: need at least 6 correspondences, got " +
                                   std::to_string(n));
  // Hartley-normalize the 3D points (center, sqrt(3) RMS radius) so the DLT
  // stays conditioned for elongated point sets; image coordinates are already
  // camera-normalized.
  Vec3d centroid = Vec3d::Zero();
  for (const auto& [px, X] : corr) centroid += X;
  centroid /= n;
  double rms = 0;
  for (const auto& [px, X] : corr) rms += (X - centroid).squaredNorm();
  rms = std::sqrt(rms / n);
  if (!(rms > 1e-12)) throw ValidationError("pnp_solve: coincident 3D points");
  const double ns = std::sqrt(3.0) / rms;

  Eigen::MatrixXd A(2 * n, 12);
  for (int i = 0; i < n; ++i) {
    const Vec3d X = ns * (corr[i].second - centroid);
    const double xn = (corr[i].first.x() - cam.cx) / cam.fx;
    const double yn = (corr[i].first.y() - cam.cy) / cam.fy;
    A.row(2 * i) << X.x(), X.y(), X.z(), 1, 0, 0, 0, 0, -xn * X.x(), -xn * X.y(), -xn * X.z(), -xn;
    A.row(2 * i + 1) << 0, 0, 0, 0, X.x(), X.y(), X.z(), 1, -yn * X.x(), -yn * X.y(), -yn * X.z(),
        -yn;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
  // A near-zero second-smallest singular value means the system does not pin
  // down a unique projection (coplanar/collinear degeneracies).
  const auto& sv = svd.singularValues();
  if (!(sv[10] > 1e-8 * sv[0]))
    throw ValidationError("pnp_solve: degenerate correspondence configuration");
  const Eigen::VectorXd h = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> M;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) M(r, c) = h[4 * r + c];
  // Undo the normalization: x ~ M' (ns (X - c)) = [ns M'_r | M'_t - ns M'_r c] X.
  M.block<3, 3>(0, 0) *= ns;
  M.col(3) -= M.block<3, 3>(0, 0) * centroid;
  const double scale = M.block<1, 3>(2, 0).norm();
  if (!(scale > 1e-12)) throw ValidationError("pnp_solve: singular projection estimate");
  M /= scale;
  // Cheirality: transformed points must sit in front of the camera.
  double mean_z = 0;
  for (const auto& [px, X] : corr) mean_z += M.block<3, 3>(0, 0).row(2).dot(X) + M(2, 3);
  if (mean_z < 0) M = -M;
  mean_z = 0;
  int behind = 0;
  for (const auto& [px, X] : corr) {
    const double z = M.block<3, 3>(0, 0).row(2).dot(X) + M(2, 3);
    mean_z += z;
    behind += z <= 0;
  }
  if (behind > 0) throw ValidationError("pnp_solve: " + std::to_string(behind) +
                                        " correspondences resolve behind the camera");

  RigidTransform T;
  {
    const Mat3d R0 = M.block<3, 3>(0, 0);
    Eigen::JacobiSVD<Mat3d> rsvd(R0, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3d R = rsvd.matrixU() * rsvd.matrixV().transpose();
    if (R.determinant() < 0) {
      Mat3d flip = Mat3d::Identity();
      flip(2, 2) = -1;
      R = rsvd.matrixU() * flip * rsvd.matrixV().transpose();
    }
    T.rotation = R;
    T.translation = M.col(3);
  }

  // Gauss-Newton on pixel reprojection error with left-perturbation updates.
  for (int it = 0; it < 20; ++it) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Vec6d b = Vec6d::Zero();
    for (const auto& [px, X] : corr) {
      const Vec3d p = T.apply(X);
      if (p.z() <= 1e-9) throw ValidationError("pnp_solve: point behind camera during refinement");
      const Vec2d r = cam.project(p) - px;
      Eigen::Matrix<double, 3, 6> dp;
      dp.block<3, 3>(0, 0) = Mat3d::Identity();
      dp.block<3, 3>(0, 3) = -skew(p);
      const Eigen::Matrix<double, 2, 6> J = projection_jacobian(cam, p) * dp;
      H += J.transpose() * J;
      b += J.transpose() * r;
    }
    Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(H);
    if (ldlt.info() != Eigen::Success)
      throw ValidationError("pnp_solve: normal equations not solvable");
    const Vec6d delta = ldlt.solve(-b);
    if (!delta.allFinite()) throw ValidationError("pnp_solve: refinement diverged");
    T = exp_se3(delta).compose(T);
    if (delta.norm() < 1e-14) break;
  }

  PnpResult res;
  res.T = T;
  double sq = 0;
  for (const auto& [px, X] : corr) sq += (cam.project(T.apply(X)) - px).squaredNorm();
  res.reproj_rmse = std::sqrt(sq / n);
  res.low_confidence = res.reproj_rmse > confidence_rmse_px;
  return res;
}

}  // namespace artsplat
