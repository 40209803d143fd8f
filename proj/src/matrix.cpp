#include "ralab/matrix.hpp"

#include <cmath>
#include <utility>

namespace ralab {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimMismatch("matrix data length does not match rows*cols");
    }
    check_finite();
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            t(j, i) = (*this)(i, j);
        }
    }
    return t;
}

void Matrix::check_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) {
            throw NonFinite("matrix contains a non-finite entry");
        }
    }
}

}  // namespace ralab
