#pragma once

#include <cstddef>
#include <Eigen/Dense>

namespace hpen {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SymmetricEigen {
  Vec values;    // ascending
  Mat vectors;   // column j pairs with values(j)
  int sweeps = 0;
  bool converged = false;
};

// Cyclic Jacobi rotations. Stops once the off-diagonal Frobenius norm drops
// below tol times the Frobenius norm of the input.
SymmetricEigen jacobi_eigen(const Mat& s, double tol = 1e-12, int max_sweeps = 100);

// Pairwise (tree) summation with a sequential base block.
double pairwise_sum(const double* v, std::size_t n);

// Rows are summed in blocks of kChunkRows, block partials are combined by a
// fixed binary tree. The result depends only on the row order.
inline constexpr std::size_t kChunkRows = 64;
void tree_reduce_columns(Mat& partials);

}  // namespace hpen
