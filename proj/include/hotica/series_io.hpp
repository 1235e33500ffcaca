#pragma once

// Mixed-series and tensor-snapshot files.
//
// Binary layout (all integers and floats little-endian):
//   8 bytes  magic "HOTICA01"
//   u32      kind (1 = mixed series [samples, tx, rx], 2 = tensor trajectory
//            [windows, tx, rx, tx, rx])
//   u32      rank
//   u64      dims[rank]
//   f64      sample_rate (0 when not applicable)
//   f64 x 2  (re, im) for every element, row-major over dims

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <locale>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hotica/common.hpp"
#include "hotica/grid.hpp"
#include "hotica/tensor4.hpp"

namespace hotica {

inline constexpr std::array<char, 8> kBinaryMagic = {'H', 'O', 'T', 'I', 'C', 'A', '0', '1'};

enum class BinaryKind : std::uint32_t { mixed_series = 1, tensor_trajectory = 2 };

struct BinaryBlock {
  BinaryKind kind = BinaryKind::mixed_series;
  std::vector<std::uint64_t> dims;
  double sample_rate = 0.0;
  std::vector<cplx> values;
};

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.put(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw Error(ErrorKind::input, "truncated binary file");
    bits |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_binary(std::ostream& out, const BinaryBlock& block) {
  out.write(kBinaryMagic.data(), kBinaryMagic.size());
  detail::put_le(out, static_cast<std::uint32_t>(block.kind));
  detail::put_le(out, static_cast<std::uint32_t>(block.dims.size()));
  for (auto d : block.dims) detail::put_le(out, d);
  detail::put_le(out, block.sample_rate);
  for (const cplx& v : block.values) {
    detail::put_le(out, v.real());
    detail::put_le(out, v.imag());
  }
}

inline BinaryBlock read_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kBinaryMagic) throw Error(ErrorKind::input, "not a HOTICA01 file");
  BinaryBlock block;
  block.kind = static_cast<BinaryKind>(detail::get_le<std::uint32_t>(in));
  const auto rank = detail::get_le<std::uint32_t>(in);
  if (rank > 16) throw Error(ErrorKind::input, "implausible rank in binary header");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    block.dims.push_back(detail::get_le<std::uint64_t>(in));
    count *= block.dims.back();
  }
  block.sample_rate = detail::get_le<double>(in);
  block.values.resize(count);
  for (auto& v : block.values) {
    const double re = detail::get_le<double>(in);
    v = {re, detail::get_le<double>(in)};
  }
  return block;
}

inline BinaryBlock series_block(std::span<const ChannelGrid> series, double sample_rate) {
  BinaryBlock block;
  block.kind = BinaryKind::mixed_series;
  const std::uint64_t pt = series.empty() ? 0 : series.front().tx_count();
  const std::uint64_t pr = series.empty() ? 0 : series.front().rx_count();
  block.dims = {series.size(), pt, pr};
  block.sample_rate = sample_rate;
  for (const auto& g : series) block.values.insert(block.values.end(), g.flat().begin(), g.flat().end());
  return block;
}

inline std::vector<ChannelGrid> series_from_block(const BinaryBlock& block) {
  if (block.kind != BinaryKind::mixed_series || block.dims.size() != 3) {
    throw Error(ErrorKind::input, "binary file does not hold a mixed series");
  }
  const auto n = block.dims[0], pt = block.dims[1], pr = block.dims[2];
  std::vector<ChannelGrid> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ChannelGrid g(pt, pr);
    std::copy_n(block.values.begin() + static_cast<std::ptrdiff_t>(i * pt * pr), pt * pr, g.flat().begin());
    out.push_back(std::move(g));
  }
  return out;
}

inline BinaryBlock trajectory_block(std::span<const Tensor4> trajectory) {
  BinaryBlock block;
  block.kind = BinaryKind::tensor_trajectory;
  const std::uint64_t pt = trajectory.empty() ? 0 : trajectory.front().tx_count();
  const std::uint64_t pr = trajectory.empty() ? 0 : trajectory.front().rx_count();
  block.dims = {trajectory.size(), pt, pr, pt, pr};
  for (const auto& t : trajectory) block.values.insert(block.values.end(), t.data().begin(), t.data().end());
  return block;
}

inline void save_binary(const std::string& path, const BinaryBlock& block) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::input, "cannot write '" + path + "'");
  write_binary(out, block);
}

inline BinaryBlock load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::input, "cannot open '" + path + "'");
  return read_binary(in);
}

/// Shortest decimal text that round-trips the double; '.' decimal point
/// regardless of the global locale.
inline std::string format_double(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

/// CSV columns t, tx, rx, re, im. Antenna indices are 1-based.
inline void write_series_csv(std::ostream& out, std::span<const ChannelGrid> series, double sample_rate) {
  out << "t,tx,rx,re,im\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string t = format_double(static_cast<double>(i) / sample_rate);
    const auto& g = series[i];
    for (std::size_t m = 0; m < g.tx_count(); ++m) {
      for (std::size_t n = 0; n < g.rx_count(); ++n) {
        out << t << ',' << m + 1 << ',' << n + 1 << ',' << format_double(g(m, n).real()) << ','
            << format_double(g(m, n).imag()) << '\n';
      }
    }
  }
}

}  // namespace hotica
