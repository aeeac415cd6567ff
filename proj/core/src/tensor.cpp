#include "cvid/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "cvid/error.hpp"

namespace cvid {

namespace {

int64_t checked_volume(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw Error::validation("tensor dimension must be positive, got " + std::to_string(d));
        n *= d;
    }
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(checked_volume(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_volume(shape_) != static_cast<int64_t>(data_.size()))
        throw Error::dimension("tensor data length " + std::to_string(data_.size()) +
                               " does not match shape " + shape_to_string(shape_));
}

Tensor Tensor::full(std::vector<int> shape, float value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0f;
    return t;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw Error::dimension("matmul expects rank-2 operands, got " + a.shape_str() + " and " + b.shape_str());
    if (a.dim(1) != b.dim(0))
        throw Error::dimension("matmul inner dimensions disagree: " + a.shape_str() + " x " + b.shape_str());
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c({m, n});
    std::vector<double> acc(static_cast<size_t>(n));
    for (int i = 0; i < m; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int r = 0; r < k; ++r) {
            const double av = a.at(i, r);
            for (int j = 0; j < n; ++j) acc[static_cast<size_t>(j)] += av * b.at(r, j);
        }
        for (int j = 0; j < n; ++j) c.at(i, j) = static_cast<float>(acc[static_cast<size_t>(j)]);
    }
    ensure_finite(c, "matmul");
    return c;
}

Tensor softmax_rows(const Tensor& a) {
    if (a.rank() != 2)
        throw Error::dimension("softmax_rows expects a rank-2 tensor, got " + a.shape_str());
    const int m = a.dim(0), n = a.dim(1);
    Tensor out({m, n});
    std::vector<double> e(static_cast<size_t>(n));
    for (int i = 0; i < m; ++i) {
        float mx = a.at(i, 0);
        for (int j = 1; j < n; ++j) mx = std::max(mx, a.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            e[static_cast<size_t>(j)] = std::exp(static_cast<double>(a.at(i, j)) - mx);
            sum += e[static_cast<size_t>(j)];
        }
        for (int j = 0; j < n; ++j) out.at(i, j) = static_cast<float>(e[static_cast<size_t>(j)] / sum);
    }
    ensure_finite(out, "softmax_rows");
    return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, int padding, const Tensor& bias) {
    if (input.rank() != 3)
        throw Error::dimension("conv2d input must be [c_in,h,w], got " + input.shape_str());
    if (kernel.rank() != 4)
        throw Error::dimension("conv2d kernel must be [c_out,c_in,kh,kw], got " + kernel.shape_str());
    if (padding < 0) throw Error::validation("conv2d padding must be nonnegative");
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
    if (kernel.dim(1) != c_in)
        throw Error::dimension("conv2d channel mismatch: input " + input.shape_str() +
                               " vs kernel " + kernel.shape_str());
    if (kh % 2 == 0 || kw % 2 == 0)
        throw Error::validation("conv2d kernel extents must be odd, got " + kernel.shape_str());
    if (bias.rank() != 1 || bias.dim(0) != c_out)
        throw Error::dimension("conv2d bias must be [c_out]=" + std::to_string(c_out) + ", got " + bias.shape_str());
    const int ho = h + 2 * padding - kh + 1;
    const int wo = w + 2 * padding - kw + 1;
    if (ho < 1 || wo < 1)
        throw Error::dimension("conv2d kernel " + kernel.shape_str() + " larger than padded input " + input.shape_str());

    Tensor out({c_out, ho, wo});
    for (int o = 0; o < c_out; ++o) {
        for (int y = 0; y < ho; ++y) {
            for (int x = 0; x < wo; ++x) {
                double acc = bias[o];
                for (int ci = 0; ci < c_in; ++ci) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = y + ky - padding;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = x + kx - padding;
                            if (ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(input.at(ci, iy, ix)) * kernel.at(o, ci, ky, kx);
                        }
                    }
                }
                out.at(o, y, x) = static_cast<float>(acc);
            }
        }
    }
    ensure_finite(out, "conv2d");
    return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw Error::dimension(std::string(op) + " shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (int64_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (int64_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (int64_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(out[i] * s);
    return out;
}

void add_scaled(Tensor& a, const Tensor& b, double s) {
    require_same_shape(a, b, "add_scaled");
    for (int64_t i = 0; i < a.size(); ++i) a[i] = static_cast<float>(a[i] + s * b[i]);
}

float max_abs(const Tensor& a) {
    float m = 0.0f;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
    return m;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    float m = 0.0f;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data().data(), b.data().data(), a.data().size_bytes()) == 0;
}

void ensure_finite(const Tensor& a, const char* where) {
    for (int64_t i = 0; i < a.size(); ++i) {
        if (!std::isfinite(a[i]))
            throw Error::numeric(std::string(where) + " produced a non-finite value at flat index " +
                                 std::to_string(i));
    }
}

// ---- binary format ---------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'V', 'T', 'L', 'T'};
constexpr uint8_t kVersion = 1;

void put_u32_le(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

uint32_t get_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
    static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);
    out.write(kMagic, 4);
    out.put(static_cast<char>(kVersion));
    out.put(static_cast<char>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) put_u32_le(out, static_cast<uint32_t>(t.dim(i)));
    for (int64_t i = 0; i < t.size(); ++i) {
        uint32_t bits;
        float v = t[i];
        std::memcpy(&bits, &v, 4);
        put_u32_le(out, bits);
    }
    if (!out) throw Error::io("failed while writing tensor stream");
}

Tensor read_tensor(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error::parse("tensor stream does not start with the VTLT magic");
    const int version = in.get();
    if (version != kVersion)
        throw Error::parse("unsupported tensor format version " + std::to_string(version));
    const int rank = in.get();
    if (rank < 1 || rank > 8) throw Error::parse("implausible tensor rank " + std::to_string(rank));
    std::vector<int> shape(static_cast<size_t>(rank));
    for (int i = 0; i < rank; ++i) {
        uint32_t d = get_u32_le(in);
        if (d == 0 || d > (1u << 24)) throw Error::parse("implausible tensor dimension " + std::to_string(d));
        shape[static_cast<size_t>(i)] = static_cast<int>(d);
    }
    Tensor t(shape);
    for (int64_t i = 0; i < t.size(); ++i) {
        uint32_t bits = get_u32_le(in);
        float v;
        std::memcpy(&v, &bits, 4);
        t[i] = v;
    }
    if (!in) throw Error::parse("tensor stream truncated");
    return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::io("cannot open for writing: " + path);
    write_tensor(out, t);
    if (!out) throw Error::io("failed writing tensor to " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error::io("cannot open for reading: " + path);
    return read_tensor(in);
}

}  // namespace cvid
