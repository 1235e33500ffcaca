#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hotica/common.hpp"
#include "hotica/grid.hpp"

namespace hotica {

/// Complex tensor T(a, b, c, d) of shape tx x rx x tx x rx. The leading pair
/// (a, b) indexes an output channel, the trailing pair (c, d) an input
/// channel. Storage is row-major, so the buffer doubles as the flattened
/// (tx*rx) x (tx*rx) matrix with row a*rx+b and column c*rx+d.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(std::size_t tx_count, std::size_t rx_count)
      : tx_(tx_count), rx_(rx_count), data_(channels() * channels()) {}

  std::size_t tx_count() const noexcept { return tx_; }
  std::size_t rx_count() const noexcept { return rx_; }
  std::size_t channels() const noexcept { return tx_ * rx_; }

  cplx& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[index(a, b, c, d)];
  }
  const cplx& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[index(a, b, c, d)];
  }

  // Flattened access: out and in are channel indices.
  cplx& flat(std::size_t out, std::size_t in) { return data_[out * channels() + in]; }
  const cplx& flat(std::size_t out, std::size_t in) const { return data_[out * channels() + in]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  bool same_shape(const Tensor4& o) const { return tx_ == o.tx_ && rx_ == o.rx_; }

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  std::size_t index(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return ((a * rx_ + b) * tx_ + c) * rx_ + d;
  }

  std::size_t tx_ = 0;
  std::size_t rx_ = 0;
  std::vector<cplx> data_;
};

/// 1 where (a, b) == (c, d), else 0.
inline Tensor4 identity4(std::size_t tx_count, std::size_t rx_count) {
  Tensor4 t(tx_count, rx_count);
  for (std::size_t i = 0; i < t.channels(); ++i) t.flat(i, i) = 1.0;
  return t;
}

inline void require_shape(const Tensor4& a, const Tensor4& b) {
  if (!a.same_shape(b)) throw Error(ErrorKind::input, "tensor shapes differ");
}

/// y(a,b) = sum_{c,d} B(a,b,c,d) x(c,d), written into `y`.
inline void separate4(const Tensor4& b, std::span<const cplx> x, std::span<cplx> y) {
  const std::size_t p = b.channels();
  if (x.size() != p || y.size() != p) throw Error(ErrorKind::input, "grid shape does not match tensor");
  for (std::size_t i = 0; i < p; ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < p; ++j) acc += b.flat(i, j) * x[j];
    y[i] = acc;
  }
}

inline Grid separate4(const Tensor4& b, const Grid& x) {
  if (x.tx_count() != b.tx_count() || x.rx_count() != b.rx_count()) {
    throw Error(ErrorKind::input, "grid shape does not match tensor");
  }
  Grid y(x.tx_count(), x.rx_count());
  separate4(b, x.flat(), y.flat());
  return y;
}

/// C(a,b,c,d) = sum_{e,z} L(a,b,e,z) R(e,z,c,d).
inline Tensor4 contract4(const Tensor4& left, const Tensor4& right) {
  require_shape(left, right);
  const std::size_t p = left.channels();
  Tensor4 out(left.tx_count(), left.rx_count());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < p; ++k) {
      const cplx w = left.flat(i, k);
      if (w == cplx{0.0, 0.0}) continue;
      for (std::size_t j = 0; j < p; ++j) out.flat(i, j) += w * right.flat(k, j);
    }
  }
  return out;
}

}  // namespace hotica
