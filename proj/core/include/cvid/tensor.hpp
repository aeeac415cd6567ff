#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cvid {

// Dense row-major float32 tensor. Public values are always contiguous and
// finite; kernels accumulate in double and run in a fixed loop order, so
// identical inputs produce bit-identical outputs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float value);
    static Tensor identity(int n);

    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int>& shape() const { return shape_; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    float& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    float at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    float& at(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float at(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    float& at(int i, int j, int k, int l) {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    float at(int i, int j, int k, int l) const {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

// ---- kernels -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& a);
Tensor conv2d(const Tensor& input, const Tensor& kernel, int padding, const Tensor& bias);

// ---- elementwise ---------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// axpy-style in-place update: a += s * b
void add_scaled(Tensor& a, const Tensor& b, double s);

float max_abs(const Tensor& a);
float max_abs_diff(const Tensor& a, const Tensor& b);
bool bit_equal(const Tensor& a, const Tensor& b);

// Throws a numeric error if any value is not finite.
void ensure_finite(const Tensor& a, const char* where);

// ---- binary format -------------------------------------------------------
// "VTLT" magic, version byte (=1), rank byte, rank x u32 little-endian dims,
// then float32 little-endian values row-major.

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace cvid
