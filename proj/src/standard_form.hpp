#pragma once

// Internal dense standard form shared by the residual check and the solver:
//   minimize c'x + c0  s.t.  A x = b,  G x + s = h,  s in K.

#include <vector>

#include <Eigen/Dense>

#include "ddcqa/conic.hpp"

namespace ddcqa::detail {

struct Block {
  ConeType type = ConeType::NonNeg;
  int offset = 0;
  int dim = 0;
};

struct StandardForm {
  int n = 0;
  Eigen::VectorXd c;
  double c0 = 0.0;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::MatrixXd g;
  Eigen::VectorXd h;
  std::vector<Block> blocks;  // rotated blocks keep their type here

  int rows() const { return static_cast<int>(h.size()); }
};

StandardForm standard_form(const ConicProblem& p);

/// Norm of the part of `v` outside the cones; rotated blocks use the
/// (u+v, u-v)/sqrt(2) lowering.
double cone_violation(const StandardForm& sf, const Eigen::VectorXd& v);

KktResiduals residuals(const StandardForm& sf, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& z);

}  // namespace ddcqa::detail
