#pragma once

#include <Eigen/Core>

namespace fixpoint {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace fixpoint
