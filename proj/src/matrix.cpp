#include "mctf/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace mctf {

namespace {

void check_finite(const Matrix& m, const char* op) {
    if (!m.all_finite()) throw std::runtime_error(std::string(op) + ": produced non-finite values");
}

}  // namespace

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) throw ShapeError("from_rows: ragged rows");
        std::copy(row.begin(), row.end(), m.row(i));
        ++i;
    }
    return m;
}

bool Matrix::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        float* out_row = out.row(i);
        for (int k = 0; k < a.cols(); ++k) {
            const float aik = a.at(i, k);
            if (aik == 0.0f) continue;
            const float* b_row = b.row(k);
            for (int j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeError("matmul_nt: inner dimensions differ");
    Matrix out(a.rows(), b.rows());
    for (int i = 0; i < a.rows(); ++i) {
        const float* a_row = a.row(i);
        for (int j = 0; j < b.rows(); ++j) {
            const float* b_row = b.row(j);
            float acc = 0.0f;
            for (int k = 0; k < a.cols(); ++k) acc += a_row[k] * b_row[k];
            out.at(i, j) = acc;
        }
    }
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out.at(j, i) = m.at(i, j);
    return out;
}

Matrix row_softmax(const Matrix& m, std::optional<std::span<const float>> bias) {
    if (bias && static_cast<int>(bias->size()) != m.cols())
        throw ShapeError("row_softmax: bias length != cols");
    Matrix out(m.rows(), m.cols());
    std::vector<float> z(m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        const float* in = m.row(i);
        for (int j = 0; j < m.cols(); ++j) z[j] = bias ? in[j] + (*bias)[j] : in[j];
        const float mx = *std::max_element(z.begin(), z.end());
        float sum = 0.0f;
        float* o = out.row(i);
        for (int j = 0; j < m.cols(); ++j) {
            o[j] = std::exp(z[j] - mx);
            sum += o[j];
        }
        for (int j = 0; j < m.cols(); ++j) o[j] /= sum;
    }
    check_finite(out, "row_softmax");
    return out;
}

Matrix layer_norm(const Matrix& m, std::span<const float> gain, std::span<const float> shift,
                  float eps) {
    if (static_cast<int>(gain.size()) != m.cols() || static_cast<int>(shift.size()) != m.cols())
        throw ShapeError("layer_norm: gain/shift length != cols");
    Matrix out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        const float* in = m.row(i);
        float mean = 0.0f;
        for (int j = 0; j < m.cols(); ++j) mean += in[j];
        mean /= static_cast<float>(m.cols());
        float var = 0.0f;
        for (int j = 0; j < m.cols(); ++j) {
            const float d = in[j] - mean;
            var += d * d;
        }
        var /= static_cast<float>(m.cols());
        const float inv = 1.0f / std::sqrt(var + eps);
        float* o = out.row(i);
        for (int j = 0; j < m.cols(); ++j) o[j] = (in[j] - mean) * inv * gain[j] + shift[j];
    }
    check_finite(out, "layer_norm");
    return out;
}

Matrix gelu(const Matrix& m) {
    constexpr float kSqrt2OverPi = 0.7978845608028654f;
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        const float x = m.data()[i];
        const float t = std::tanh(kSqrt2OverPi * (x + 0.044715f * x * x * x));
        out.data()[i] = 0.5f * x * (1.0f + t);
    }
    check_finite(out, "gelu");
    return out;
}

Matrix l2_normalize_rows(const Matrix& m, float eps) {
    Matrix out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        const float* in = m.row(i);
        float norm_sq = 0.0f;
        for (int j = 0; j < m.cols(); ++j) norm_sq += in[j] * in[j];
        const float norm = std::sqrt(norm_sq);
        float* o = out.row(i);
        if (norm < eps) {
            std::fill(o, o + m.cols(), 0.0f);
        } else {
            for (int j = 0; j < m.cols(); ++j) o[j] = in[j] / norm;
        }
    }
    return out;
}

}  // namespace mctf
