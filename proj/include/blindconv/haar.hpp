#pragma once

#include <Eigen/Core>

#include "blindconv/fft.hpp"

namespace blindconv {

/// Orthonormal 2D Haar pyramid on a row-major grid.
///
/// Each level transforms the rows and then the columns of the current
/// approximation block, storing averages in the leading half and
/// differences in the trailing half of each axis. Both grid dimensions must
/// be divisible by 2^levels (a 1D signal is the grid {1, L}; its row axis is
/// left untouched).
Eigen::VectorXd haar_forward(const Eigen::VectorXd& grid, GridShape shape, int levels);
Eigen::VectorXd haar_inverse(const Eigen::VectorXd& coeffs, GridShape shape, int levels);

/// Largest level count the shape supports.
int max_haar_levels(GridShape shape);

}  // namespace blindconv
