#include "tandem/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace tandem {

Tensor::Tensor(int rows, int cols, std::vector<double> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != static_cast<std::size_t>(rows) * cols) {
        throw std::invalid_argument("Tensor: " + std::to_string(data_.size()) + " values for shape " + shape_str());
    }
}

Tensor Tensor::full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    t.fill(v);
    return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Tensor t(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) throw std::invalid_argument("Tensor::from_rows: ragged rows");
        int j = 0;
        for (double v : row) t.at(i, j++) = v;
        ++i;
    }
    return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
    Tensor t(1, static_cast<int>(values.size()));
    int j = 0;
    for (double v : values) t.at(0, j++) = v;
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t[0] = v;
    return t;
}

std::string Tensor::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Tensor::item() const {
    if (rows_ != 1 || cols_ != 1) {
        throw std::invalid_argument("Tensor::item: expected 1x1, got " + shape_str());
    }
    return data_[0];
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

void Tensor::add_scaled(const Tensor& other, double scale) {
    require_same_shape(*this, other, "add_scaled");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

}  // namespace tandem
