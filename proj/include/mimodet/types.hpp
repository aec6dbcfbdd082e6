#pragma once

#include <Eigen/Dense>

namespace mimodet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

}  // namespace mimodet
