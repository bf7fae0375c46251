#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

namespace holoseis {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

}  // namespace holoseis
