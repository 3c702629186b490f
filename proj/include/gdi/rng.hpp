#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace gdi {

/// xoshiro256** seeded through SplitMix64.
///
/// Substreams are derived by hashing a path of indices into the seed, so the
/// stream for (master_seed, theta_index, sigma_index, replicate) can be
/// rebuilt in isolation without touching any other stream.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  /// Stream identified by `seed` and an index path.
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return UINT64_MAX; }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);

  static constexpr std::string_view algorithm =
      "xoshiro256**/splitmix64-path/box-muller-v1";

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;

  friend double normal_draw(Rng& rng);
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Standard normal draw. Box-Muller on two uniforms in (0, 1]; the second
/// value of each pair is cached and returned on the next call.
double normal_draw(Rng& rng);

}  // namespace gdi
