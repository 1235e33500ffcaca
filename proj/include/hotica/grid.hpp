#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hotica/common.hpp"

namespace hotica {

/// Complex samples indexed by (tx, rx). Storage is row-major so the flat
/// index of (tx, rx) is tx * rx_count + rx, the channel order used everywhere
/// a grid is viewed as a vector.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t tx_count, std::size_t rx_count)
      : tx_(tx_count), rx_(rx_count), data_(tx_count * rx_count) {}

  std::size_t tx_count() const noexcept { return tx_; }
  std::size_t rx_count() const noexcept { return rx_; }
  std::size_t size() const noexcept { return data_.size(); }

  cplx& operator()(std::size_t tx, std::size_t rx) { return data_[tx * rx_ + rx]; }
  const cplx& operator()(std::size_t tx, std::size_t rx) const { return data_[tx * rx_ + rx]; }

  std::span<cplx> flat() noexcept { return data_; }
  std::span<const cplx> flat() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t tx_ = 0;
  std::size_t rx_ = 0;
  std::vector<cplx> data_;
};

using ChannelGrid = Grid;

}  // namespace hotica
