#include "steep/empirical.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>

namespace steep {
namespace {

constexpr std::array<char, 8> kMagic = {'S', 'T', 'E', 'E', 'P', 'X', 'I', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("truncated sample dump");
  return v;
}

}  // namespace

void write_measure(std::ostream& out, const EmpiricalMeasure<ContinuousState>& m) {
  const std::uint64_t dim = m.empty() ? 0 : m.at(0).size();
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, dim);
  put(out, static_cast<std::uint64_t>(m.size()));
  for (const auto& s : m.samples()) {
    if (s.size() != dim) throw DimensionError(dim, s.size());
    out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  }
}

EmpiricalMeasure<ContinuousState> read_measure(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("not a sample dump (bad magic)");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("unsupported sample dump version " + std::to_string(version));
  const auto dim = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  EmpiricalMeasure<ContinuousState> m;
  ContinuousState x(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(dim * sizeof(double)))) {
      throw std::runtime_error("truncated sample dump");
    }
    m.push(x);
  }
  return m;
}

}  // namespace steep
