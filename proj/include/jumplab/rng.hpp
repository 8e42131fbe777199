#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace jumplab {

/// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key);
};

/// A reproducible random stream addressed by (seed, experiment, sample, substream).
///
/// Draw number j of a stream is a pure function of its address and j, so a
/// sample's randomness does not depend on which worker produced it or in
/// which order samples were processed.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint32_t experiment, std::uint32_t sample,
           std::uint32_t substream = 0);

    /// Sibling stream for the same sample with a different substream tag.
    Stream substream(std::uint32_t tag) const;

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();
    /// Standard normal via Box-Muller.
    double normal();
    /// Exponential with unit rate.
    double exponential();

    std::uint32_t next_u32();

private:
    void refill();

    Philox4x32::Key key_;
    std::uint32_t experiment_;
    std::uint32_t sample_;
    std::uint32_t tag_;
    std::uint32_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 4;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Master seed plus the derivation rule sample index -> stream.
struct RngPolicy {
    std::uint64_t master_seed = 42;

    Stream stream(std::uint32_t experiment, std::uint64_t sample, std::uint32_t substream = 0) const;
};

/// Stable 32-bit experiment id from a name (FNV-1a).
std::uint32_t experiment_id(std::string_view name);

// Substream tags used within one sample.
inline constexpr std::uint32_t kPrimaryNoise = 0;
inline constexpr std::uint32_t kSecondaryNoise = 1;
inline constexpr std::uint32_t kAuxiliary = 2;

}  // namespace jumplab
