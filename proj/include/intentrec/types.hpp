#pragma once

#include <Eigen/Core>

namespace intentrec {

// 64-bit floats everywhere; gradient checks need the precision and the
// data sizes involved never make speed an issue.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace intentrec
