#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <utility>

namespace onionpath {

// Identity of an overlay relay or of the client vertex.
enum class NodeId : std::uint32_t {};

constexpr NodeId node_id(std::uint32_t v) { return NodeId{v}; }
constexpr std::uint32_t raw(NodeId id) { return static_cast<std::uint32_t>(id); }

// Unordered vertex pair, always stored with a <= b.
struct Edge {
  NodeId a{};
  NodeId b{};

  Edge() = default;
  Edge(NodeId x, NodeId y) : a(raw(x) <= raw(y) ? x : y), b(raw(x) <= raw(y) ? y : x) {}

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge& l, const Edge& r) {
    return std::pair{raw(l.a), raw(l.b)} <=> std::pair{raw(r.a), raw(r.b)};
  }
};

// Logical clock used by the simulation (one tick per measurement round).
using Tick = std::int64_t;

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent RNG streams from a seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t));
  return h;
}

// Stable 64-bit tag for short ASCII labels ("population", "warmup", ...).
constexpr std::uint64_t tag(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s != '\0'; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
  return h;
}

// Uniform double in [0, 1) built from the top 53 bits; independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by rejection, bound > 0.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

// Fisher-Yates shuffle driven by uniform_below so results do not depend on
// the standard library's std::shuffle.
template <typename Container>
void shuffle_in_place(Container& c, Rng& rng) {
  for (std::size_t i = c.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    using std::swap;
    swap(c[i - 1], c[j]);
  }
}

}  // namespace onionpath

template <>
struct std::hash<onionpath::Edge> {
  std::size_t operator()(const onionpath::Edge& e) const noexcept {
    return static_cast<std::size_t>(
        onionpath::mix64((std::uint64_t{onionpath::raw(e.a)} << 32) | onionpath::raw(e.b)));
  }
};
