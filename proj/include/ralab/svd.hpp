#pragma once

#include <vector>

#include "ralab/matrix.hpp"

namespace ralab {

struct Svd {
    Matrix u;               // rows(m) x r, orthonormal columns
    std::vector<double> s;  // r singular values, non-negative, non-increasing
    Matrix v;               // cols(m) x r, orthonormal columns
};

/// Thin SVD via one-sided Jacobi rotations, r = min(rows, cols).
/// m = u * diag(s) * v^T. Columns of u belonging to zero singular values
/// are completed to an orthonormal set. Throws NoConvergence if the sweep
/// cap is hit.
Svd svd(const Matrix& m);

/// Eigen-decomposition of a symmetric matrix via the cyclic Jacobi method.
/// Returns eigenvalues sorted descending and matching eigenvectors as
/// columns.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

}  // namespace ralab
