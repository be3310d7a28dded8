#pragma once

// Dense truncated tensor algebra T^N(R^d).
//
// A word w = i_1...i_n (letters 1..d) is stored at flat index
// sum_k (i_k - 1) d^(n-k) inside level n, and levels are laid out
// contiguously: level 0 (one scalar), level 1 (d entries), ... level N.

#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

namespace levy_sigkernel {

using Word = std::vector<int>;

/// d^n as a size; throws InvalidParameter on overflow.
std::size_t level_size(int dim, int n);

/// Base-d positional index of a word of letters in 1..dim.
/// Throws InvalidWord if a letter is outside 1..dim.
std::size_t word_index(std::span<const int> word, int dim);
std::size_t word_index(std::initializer_list<int> word, int dim);

/// Inverse of word_index for words of the given length.
Word index_word(std::size_t index, int length, int dim);

/// Per-level Euclidean norms |x^(n)|, n = 0..depth.
struct LevelNorms {
  std::vector<double> values;
};

class TruncatedTensor {
 public:
  /// Zero element of T^0(R^1).
  TruncatedTensor() : TruncatedTensor(1, 0) {}
  /// Zero element of T^depth(R^dim).
  TruncatedTensor(int dim, int depth);

  static TruncatedTensor scalar(int dim, int depth, double value);
  /// coeff * e_word, stored at the given depth (word length must fit).
  static TruncatedTensor basis(int dim, int depth, std::span<const int> word,
                               double coeff = 1.0);
  static TruncatedTensor basis(int dim, int depth,
                               std::initializer_list<int> word,
                               double coeff = 1.0);
  /// Builds from explicit level arrays; levels[n] must have dim^n entries.
  static TruncatedTensor from_levels(int dim,
                                     const std::vector<std::vector<double>>& levels);

  int dim() const noexcept { return dim_; }
  int depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return data_.size(); }

  /// Offset of level n inside data(); valid for n <= depth + 1.
  std::size_t level_offset(int n) const;

  std::span<double> level(int n);
  std::span<const double> level(int n) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Coefficient of e_word; zero if the word is longer than depth.
  double coeff(std::span<const int> word) const;
  double coeff(std::initializer_list<int> word) const;
  double& coeff_ref(std::span<const int> word);

  double scalar_part() const noexcept { return data_[0]; }
  bool all_finite() const noexcept;

  // Binary arithmetic keeps the depth of the left operand; levels of the
  // right operand above it are dropped and missing ones count as zero.
  TruncatedTensor& operator+=(const TruncatedTensor& other);
  TruncatedTensor& operator-=(const TruncatedTensor& other);
  TruncatedTensor& operator*=(double factor);
  TruncatedTensor& operator/=(double factor);

  friend TruncatedTensor operator+(TruncatedTensor lhs, const TruncatedTensor& rhs) {
    return lhs += rhs;
  }
  friend TruncatedTensor operator-(TruncatedTensor lhs, const TruncatedTensor& rhs) {
    return lhs -= rhs;
  }
  friend TruncatedTensor operator*(TruncatedTensor lhs, double factor) {
    return lhs *= factor;
  }
  friend TruncatedTensor operator*(double factor, TruncatedTensor rhs) {
    return rhs *= factor;
  }
  friend TruncatedTensor operator/(TruncatedTensor lhs, double factor) {
    return lhs /= factor;
  }
  TruncatedTensor operator-() const { return *this * -1.0; }

 private:
  int dim_;
  int depth_;
  std::vector<double> data_;
};

/// Truncated product: level n of the result is sum_k x^(k) (x) y^(n-k),
/// computed for n <= out_depth from whatever levels the inputs store.
TruncatedTensor tensor_mul(const TruncatedTensor& x, const TruncatedTensor& y,
                           int out_depth);
/// Same with out_depth = max(x.depth, y.depth).
TruncatedTensor tensor_mul(const TruncatedTensor& x, const TruncatedTensor& y);

/// sum_w x^w y^w over words of length <= min(x.depth, y.depth).
double inner_product(const TruncatedTensor& x, const TruncatedTensor& y);

LevelNorms level_norms(const TruncatedTensor& x);
/// (sum_n |x^(n)|^p)^(1/p); p = +infinity selects the max-level norm.
double norm_p(const TruncatedTensor& x, double p);
double norm_max(const TruncatedTensor& x);

/// Level n scaled by lambda^n.
TruncatedTensor dilate(const TruncatedTensor& x, double lambda);

/// Requires scalar part 0. Result has the depth of x.
TruncatedTensor exp_tensor(const TruncatedTensor& x);
/// Requires scalar part 1.
TruncatedTensor log_tensor(const TruncatedTensor& x);
/// Inverse in the group of tensors with unit scalar part.
TruncatedTensor group_inverse(const TruncatedTensor& x);

/// x |> z: coefficient at w is sum_v x^v z^(vw). Depth of z.
TruncatedTensor adjoint_left(const TruncatedTensor& x, const TruncatedTensor& z);
/// y <| z: coefficient at w is sum_v y^v z^(wv). Depth of z.
TruncatedTensor adjoint_right(const TruncatedTensor& y, const TruncatedTensor& z);
/// Adjoint products with the empty-word coefficient removed.
TruncatedTensor adjoint_left_zero(const TruncatedTensor& x, const TruncatedTensor& z);
TruncatedTensor adjoint_right_zero(const TruncatedTensor& y, const TruncatedTensor& z);

/// Level-n part of x (same depth as x; zero if n > depth).
TruncatedTensor project(const TruncatedTensor& x, int n);
/// Element of T^N holding the levels 0..N of x (zero padded if N > depth).
TruncatedTensor truncate(const TruncatedTensor& x, int depth);

/// max_w |x^w - y^w| over the union of stored words.
double max_abs_diff(const TruncatedTensor& x, const TruncatedTensor& y);

}  // namespace levy_sigkernel
