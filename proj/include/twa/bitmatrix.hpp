#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace twa {

/**
 * Square boolean matrix stored as packed rows of 64-bit words.
 *
 * Used both for relations over states and for run relations over
 * (state, port) pairs.
 */
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(std::size_t n)
      : n_(n), wpr_((n + 63) / 64), bits_(n * wpr_, 0) {}

  static BitMatrix identity(std::size_t n) {
    BitMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i);
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t words_per_row() const noexcept { return wpr_; }

  bool test(std::size_t i, std::size_t j) const {
    return (bits_[i * wpr_ + j / 64] >> (j % 64)) & 1u;
  }
  void set(std::size_t i, std::size_t j, bool value = true) {
    std::uint64_t& w = bits_[i * wpr_ + j / 64];
    const std::uint64_t mask = std::uint64_t{1} << (j % 64);
    w = value ? (w | mask) : (w & ~mask);
  }

  std::span<const std::uint64_t> row(std::size_t i) const {
    return {bits_.data() + i * wpr_, wpr_};
  }
  std::span<std::uint64_t> row(std::size_t i) {
    return {bits_.data() + i * wpr_, wpr_};
  }

  /// OR row `src` of `other` into row `dst` of this matrix.
  void or_row(std::size_t dst, const BitMatrix& other, std::size_t src) {
    auto d = row(dst);
    auto s = other.row(src);
    for (std::size_t w = 0; w < wpr_; ++w) d[w] |= s[w];
  }

  /// Calls fn(j) for every set column j of row i, in increasing order.
  template <typename F>
  void for_each_in_row(std::size_t i, F&& fn) const {
    auto r = row(i);
    for (std::size_t w = 0; w < wpr_; ++w) {
      std::uint64_t word = r[w];
      while (word != 0) {
        const int b = std::countr_zero(word);
        fn(w * 64 + static_cast<std::size_t>(b));
        word &= word - 1;
      }
    }
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool subset_of(const BitMatrix& other) const {
    for (std::size_t k = 0; k < bits_.size(); ++k)
      if ((bits_[k] & ~other.bits_[k]) != 0) return false;
    return true;
  }

  BitMatrix& operator|=(const BitMatrix& other) {
    for (std::size_t k = 0; k < bits_.size(); ++k) bits_[k] |= other.bits_[k];
    return *this;
  }
  BitMatrix& operator&=(const BitMatrix& other) {
    for (std::size_t k = 0; k < bits_.size(); ++k) bits_[k] &= other.bits_[k];
    return *this;
  }
  friend BitMatrix operator|(BitMatrix a, const BitMatrix& b) { return a |= b; }
  friend BitMatrix operator&(BitMatrix a, const BitMatrix& b) { return a &= b; }

  /// Relational product: (i,k) set iff some j has (i,j) in *this and (j,k) in rhs.
  BitMatrix operator*(const BitMatrix& rhs) const {
    BitMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for_each_in_row(i, [&](std::size_t j) { out.or_row(i, rhs, j); });
    return out;
  }

  BitMatrix transposed() const {
    BitMatrix out(n_);
    for (std::size_t i = 0; i < n_; ++i)
      for_each_in_row(i, [&](std::size_t j) { out.set(j, i); });
    return out;
  }

  /// Reflexive-transitive closure (Warshall).
  BitMatrix star() const {
    BitMatrix out = *this;
    for (std::size_t i = 0; i < n_; ++i) out.set(i, i);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t i = 0; i < n_; ++i)
        if (out.test(i, k)) out.or_row(i, out, k);
    return out;
  }

  bool empty() const {
    for (auto w : bits_)
      if (w != 0) return false;
    return true;
  }

  std::size_t hash() const noexcept {
    std::uint64_t h = 1469598103934665603ull ^ n_;
    for (auto w : bits_) {
      h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t wpr_ = 0;
  std::vector<std::uint64_t> bits_;
};

}  // namespace twa

template <>
struct std::hash<twa::BitMatrix> {
  std::size_t operator()(const twa::BitMatrix& m) const noexcept {
    return m.hash();
  }
};
