#include "levy_sigkernel/tensor_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "levy_sigkernel/errors.hpp"

namespace levy_sigkernel {

namespace {

void require_same_dim(const TruncatedTensor& x, const TruncatedTensor& y,
                      const char* op) {
  if (x.dim() != y.dim()) {
    throw DimMismatch(std::string(op) + ": dimensions " + std::to_string(x.dim()) +
                      " and " + std::to_string(y.dim()));
  }
}

}  // namespace

std::size_t level_size(int dim, int n) {
  if (dim < 1 || n < 0) throw InvalidParameter("level_size: dim >= 1 and n >= 0");
  std::size_t out = 1;
  for (int k = 0; k < n; ++k) {
    if (out > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(dim)) {
      throw InvalidParameter("level_size: d^n overflows");
    }
    out *= static_cast<std::size_t>(dim);
  }
  return out;
}

std::size_t word_index(std::span<const int> word, int dim) {
  std::size_t idx = 0;
  for (int letter : word) {
    if (letter < 1 || letter > dim) {
      throw InvalidWord("letter " + std::to_string(letter) + " outside 1.." +
                        std::to_string(dim));
    }
    idx = idx * static_cast<std::size_t>(dim) + static_cast<std::size_t>(letter - 1);
  }
  return idx;
}

std::size_t word_index(std::initializer_list<int> word, int dim) {
  return word_index(std::span<const int>(word.begin(), word.size()), dim);
}

Word index_word(std::size_t index, int length, int dim) {
  if (index >= level_size(dim, length)) {
    throw InvalidWord("index " + std::to_string(index) + " out of range for length " +
                      std::to_string(length));
  }
  Word w(static_cast<std::size_t>(length));
  for (int k = length - 1; k >= 0; --k) {
    w[static_cast<std::size_t>(k)] = static_cast<int>(index % static_cast<std::size_t>(dim)) + 1;
    index /= static_cast<std::size_t>(dim);
  }
  return w;
}

// ---------------------------------------------------------------------------
// TruncatedTensor

TruncatedTensor::TruncatedTensor(int dim, int depth) : dim_(dim), depth_(depth) {
  if (dim < 1) throw InvalidParameter("TruncatedTensor: dim must be >= 1");
  if (depth < 0) throw InvalidParameter("TruncatedTensor: depth must be >= 0");
  std::size_t total = 0;
  for (int n = 0; n <= depth; ++n) total += level_size(dim, n);
  data_.assign(total, 0.0);
}

TruncatedTensor TruncatedTensor::scalar(int dim, int depth, double value) {
  TruncatedTensor t(dim, depth);
  t.data_[0] = value;
  return t;
}

TruncatedTensor TruncatedTensor::basis(int dim, int depth, std::span<const int> word,
                                       double coeff) {
  if (static_cast<int>(word.size()) > depth) {
    throw InvalidParameter("basis: word longer than depth");
  }
  TruncatedTensor t(dim, depth);
  t.coeff_ref(word) = coeff;
  return t;
}

TruncatedTensor TruncatedTensor::basis(int dim, int depth, std::initializer_list<int> word,
                                       double coeff) {
  return basis(dim, depth, std::span<const int>(word.begin(), word.size()), coeff);
}

TruncatedTensor TruncatedTensor::from_levels(int dim,
                                             const std::vector<std::vector<double>>& levels) {
  if (levels.empty()) throw InvalidParameter("from_levels: at least level 0 required");
  TruncatedTensor t(dim, static_cast<int>(levels.size()) - 1);
  for (int n = 0; n <= t.depth_; ++n) {
    const auto& src = levels[static_cast<std::size_t>(n)];
    if (src.size() != level_size(dim, n)) {
      throw InvalidParameter("from_levels: level " + std::to_string(n) + " must have " +
                             std::to_string(level_size(dim, n)) + " entries");
    }
    std::copy(src.begin(), src.end(), t.level(n).begin());
  }
  return t;
}

std::size_t TruncatedTensor::level_offset(int n) const {
  if (n < 0 || n > depth_ + 1) throw OutOfRange("level_offset: level out of range");
  if (dim_ == 1) return static_cast<std::size_t>(n);
  // (d^n - 1) / (d - 1)
  return (level_size(dim_, n) - 1) / static_cast<std::size_t>(dim_ - 1);
}

std::span<double> TruncatedTensor::level(int n) {
  if (n < 0 || n > depth_) throw OutOfRange("level " + std::to_string(n) + " above depth");
  return std::span<double>(data_).subspan(level_offset(n), level_size(dim_, n));
}

std::span<const double> TruncatedTensor::level(int n) const {
  if (n < 0 || n > depth_) throw OutOfRange("level " + std::to_string(n) + " above depth");
  return std::span<const double>(data_).subspan(level_offset(n), level_size(dim_, n));
}

double TruncatedTensor::coeff(std::span<const int> word) const {
  const int n = static_cast<int>(word.size());
  const std::size_t idx = word_index(word, dim_);
  if (n > depth_) return 0.0;
  return data_[level_offset(n) + idx];
}

double TruncatedTensor::coeff(std::initializer_list<int> word) const {
  return coeff(std::span<const int>(word.begin(), word.size()));
}

double& TruncatedTensor::coeff_ref(std::span<const int> word) {
  const int n = static_cast<int>(word.size());
  const std::size_t idx = word_index(word, dim_);
  if (n > depth_) throw OutOfRange("coeff_ref: word longer than depth");
  return data_[level_offset(n) + idx];
}

bool TruncatedTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

TruncatedTensor& TruncatedTensor::operator+=(const TruncatedTensor& other) {
  require_same_dim(*this, other, "operator+=");
  const std::size_t n = std::min(data_.size(), other.data_.size());
  for (std::size_t i = 0; i < n; ++i) data_[i] += other.data_[i];
  return *this;
}

TruncatedTensor& TruncatedTensor::operator-=(const TruncatedTensor& other) {
  require_same_dim(*this, other, "operator-=");
  const std::size_t n = std::min(data_.size(), other.data_.size());
  for (std::size_t i = 0; i < n; ++i) data_[i] -= other.data_[i];
  return *this;
}

TruncatedTensor& TruncatedTensor::operator*=(double factor) {
  for (double& v : data_) v *= factor;
  return *this;
}

TruncatedTensor& TruncatedTensor::operator/=(double factor) {
  for (double& v : data_) v /= factor;
  return *this;
}

// ---------------------------------------------------------------------------
// Products and pairings

TruncatedTensor tensor_mul(const TruncatedTensor& x, const TruncatedTensor& y,
                           int out_depth) {
  require_same_dim(x, y, "tensor_mul");
  if (out_depth < 0) throw InvalidParameter("tensor_mul: negative out_depth");
  const int d = x.dim();
  TruncatedTensor out(d, out_depth);
  for (int n = 0; n <= out_depth; ++n) {
    auto dst = out.level(n);
    const int k_lo = std::max(0, n - y.depth());
    const int k_hi = std::min(n, x.depth());
    for (int k = k_lo; k <= k_hi; ++k) {
      auto xk = x.level(k);
      auto yr = y.level(n - k);
      const std::size_t block = yr.size();
      for (std::size_t a = 0; a < xk.size(); ++a) {
        const double xa = xk[a];
        if (xa == 0.0) continue;
        double* row = dst.data() + a * block;
        for (std::size_t b = 0; b < block; ++b) row[b] += xa * yr[b];
      }
    }
  }
  return out;
}

TruncatedTensor tensor_mul(const TruncatedTensor& x, const TruncatedTensor& y) {
  return tensor_mul(x, y, std::max(x.depth(), y.depth()));
}

double inner_product(const TruncatedTensor& x, const TruncatedTensor& y) {
  require_same_dim(x, y, "inner_product");
  const std::size_t n = std::min(x.size(), y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x.data()[i] * y.data()[i];
  return acc;
}

LevelNorms level_norms(const TruncatedTensor& x) {
  LevelNorms out;
  out.values.reserve(static_cast<std::size_t>(x.depth() + 1));
  for (int n = 0; n <= x.depth(); ++n) {
    double sq = 0.0;
    for (double v : x.level(n)) sq += v * v;
    out.values.push_back(std::sqrt(sq));
  }
  return out;
}

double norm_max(const TruncatedTensor& x) {
  const auto norms = level_norms(x);
  return *std::max_element(norms.values.begin(), norms.values.end());
}

double norm_p(const TruncatedTensor& x, double p) {
  if (std::isinf(p) && p > 0) return norm_max(x);
  if (!(p >= 1.0)) throw InvalidParameter("norm_p: p must be >= 1");
  const auto norms = level_norms(x);
  if (p == 1.0) {
    double s = 0.0;
    for (double v : norms.values) s += v;
    return s;
  }
  double s = 0.0;
  for (double v : norms.values) s += std::pow(v, p);
  return std::pow(s, 1.0 / p);
}

TruncatedTensor dilate(const TruncatedTensor& x, double lambda) {
  TruncatedTensor out = x;
  double scale = 1.0;
  for (int n = 0; n <= x.depth(); ++n) {
    for (double& v : out.level(n)) v *= scale;
    scale *= lambda;
  }
  return out;
}

// ---------------------------------------------------------------------------
// exp / log / inverse. Arguments are nilpotent after truncation so all the
// series are finite sums, evaluated in Horner form.

namespace {

constexpr double kScalarTolerance = 1e-12;

}  // namespace

TruncatedTensor exp_tensor(const TruncatedTensor& x) {
  if (std::abs(x.scalar_part()) > kScalarTolerance) {
    throw ScalarPartError("exp_tensor: scalar part must be 0");
  }
  const int depth = x.depth();
  TruncatedTensor xs = x;
  xs.data()[0] = 0.0;
  const auto one = TruncatedTensor::scalar(x.dim(), depth, 1.0);
  TruncatedTensor r = one;
  for (int k = depth; k >= 1; --k) {
    r = tensor_mul(xs, r, depth);
    r /= static_cast<double>(k);
    r.data()[0] += 1.0;
  }
  return r;
}

TruncatedTensor log_tensor(const TruncatedTensor& x) {
  if (std::abs(x.scalar_part() - 1.0) > kScalarTolerance) {
    throw ScalarPartError("log_tensor: scalar part must be 1");
  }
  const int depth = x.depth();
  TruncatedTensor y = x;
  y.data()[0] = 0.0;
  if (depth == 0) return y;
  auto coef = [](int n) { return ((n % 2 == 1) ? 1.0 : -1.0) / static_cast<double>(n); };
  TruncatedTensor r = TruncatedTensor::scalar(x.dim(), depth, coef(depth));
  for (int n = depth - 1; n >= 1; --n) {
    r = tensor_mul(y, r, depth);
    r.data()[0] += coef(n);
  }
  return tensor_mul(y, r, depth);
}

TruncatedTensor group_inverse(const TruncatedTensor& x) {
  if (std::abs(x.scalar_part() - 1.0) > kScalarTolerance) {
    throw ScalarPartError("group_inverse: scalar part must be 1");
  }
  const int depth = x.depth();
  // 1 - x has zero scalar part.
  TruncatedTensor q = -x;
  q.data()[0] = 0.0;
  TruncatedTensor r = TruncatedTensor::scalar(x.dim(), depth, 1.0);
  for (int k = 1; k <= depth; ++k) {
    r = tensor_mul(q, r, depth);
    r.data()[0] += 1.0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Adjoint multiplications

TruncatedTensor adjoint_left(const TruncatedTensor& x, const TruncatedTensor& z) {
  require_same_dim(x, z, "adjoint_left");
  const int d = z.dim();
  TruncatedTensor out(d, z.depth());
  for (int k = 0; k <= std::min(x.depth(), z.depth()); ++k) {
    auto xk = x.level(k);
    for (int n = k; n <= z.depth(); ++n) {
      auto zn = z.level(n);
      auto dst = out.level(n - k);
      const std::size_t block = dst.size();
      for (std::size_t a = 0; a < xk.size(); ++a) {
        const double xa = xk[a];
        if (xa == 0.0) continue;
        const double* src = zn.data() + a * block;
        for (std::size_t b = 0; b < block; ++b) dst[b] += xa * src[b];
      }
    }
  }
  return out;
}

TruncatedTensor adjoint_right(const TruncatedTensor& y, const TruncatedTensor& z) {
  require_same_dim(y, z, "adjoint_right");
  const int d = z.dim();
  TruncatedTensor out(d, z.depth());
  for (int k = 0; k <= std::min(y.depth(), z.depth()); ++k) {
    auto yk = y.level(k);
    const std::size_t suffix = yk.size();
    for (int n = k; n <= z.depth(); ++n) {
      auto zn = z.level(n);
      auto dst = out.level(n - k);
      for (std::size_t b = 0; b < dst.size(); ++b) {
        const double* src = zn.data() + b * suffix;
        double acc = 0.0;
        for (std::size_t a = 0; a < suffix; ++a) acc += yk[a] * src[a];
        dst[b] += acc;
      }
    }
  }
  return out;
}

TruncatedTensor adjoint_left_zero(const TruncatedTensor& x, const TruncatedTensor& z) {
  auto out = adjoint_left(x, z);
  out.data()[0] = 0.0;
  return out;
}

TruncatedTensor adjoint_right_zero(const TruncatedTensor& y, const TruncatedTensor& z) {
  auto out = adjoint_right(y, z);
  out.data()[0] = 0.0;
  return out;
}

TruncatedTensor project(const TruncatedTensor& x, int n) {
  if (n < 0) throw InvalidParameter("project: negative level");
  TruncatedTensor out(x.dim(), x.depth());
  if (n <= x.depth()) {
    auto src = x.level(n);
    std::copy(src.begin(), src.end(), out.level(n).begin());
  }
  return out;
}

TruncatedTensor truncate(const TruncatedTensor& x, int depth) {
  if (depth < 0) throw InvalidParameter("truncate: negative depth");
  TruncatedTensor out(x.dim(), depth);
  const std::size_t n = std::min(out.size(), x.size());
  std::copy_n(x.data().begin(), n, out.data().begin());
  return out;
}

double max_abs_diff(const TruncatedTensor& x, const TruncatedTensor& y) {
  require_same_dim(x, y, "max_abs_diff");
  const auto& big = x.size() >= y.size() ? x : y;
  const auto& small = x.size() >= y.size() ? y : x;
  double m = 0.0;
  for (std::size_t i = 0; i < big.size(); ++i) {
    const double s = i < small.size() ? small.data()[i] : 0.0;
    m = std::max(m, std::abs(big.data()[i] - s));
  }
  return m;
}

}  // namespace levy_sigkernel
