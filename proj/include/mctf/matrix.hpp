#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mctf {

/// Thrown when operand shapes do not line up.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major float32 matrix. The only tensor type in the project;
/// vectors are stored as 1xN.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0f) {
        if (rows < 0 || cols < 0) throw ShapeError("Matrix: negative dimension");
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<float>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    float& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    float at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    float* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const float* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    std::span<float> row_span(int r) { return {row(r), static_cast<std::size_t>(cols_)}; }
    std::span<const float> row_span(int r) const { return {row(r), static_cast<std::size_t>(cols_)}; }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool all_finite() const;

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<float> data_;
};

/// Standard matrix product. Throws ShapeError unless a.cols == b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Elementwise sum; shapes must match.
Matrix add(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Row-wise softmax with an optional per-column additive bias term.
/// Stabilized by per-row max subtraction (applied after the bias).
Matrix row_softmax(const Matrix& m, std::optional<std::span<const float>> bias = std::nullopt);

/// Per-row layer normalization followed by the affine gain/shift.
Matrix layer_norm(const Matrix& m, std::span<const float> gain, std::span<const float> shift,
                  float eps = 1e-6f);

/// Elementwise GELU, tanh approximation.
Matrix gelu(const Matrix& m);

/// Scales each row to unit L2 norm; rows with norm below eps are left as zeros.
Matrix l2_normalize_rows(const Matrix& m, float eps = 1e-12f);

}  // namespace mctf
