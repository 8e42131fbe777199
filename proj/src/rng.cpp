#include "jumplab/rng.hpp"

#include "jumplab/error.hpp"

#include <cmath>
#include <numbers>

namespace jumplab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline Philox4x32::Counter philox_round(const Philox4x32::Counter& c, const Philox4x32::Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        ctr = philox_round(ctr, key);
    }
    return ctr;
}

Stream::Stream(std::uint64_t seed, std::uint32_t experiment, std::uint32_t sample,
               std::uint32_t substream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      experiment_(experiment),
      sample_(sample),
      tag_(substream) {}

Stream Stream::substream(std::uint32_t tag) const {
    Stream sibling = *this;
    sibling.tag_ = tag;
    sibling.block_ = 0;
    sibling.used_ = 4;
    sibling.has_spare_normal_ = false;
    return sibling;
}

void Stream::refill() {
    buffer_ = Philox4x32::apply({block_, tag_, sample_, experiment_}, key_);
    ++block_;
    if (block_ == 0) {
        throw NumericalError("random stream exhausted (2^32 blocks)");
    }
    used_ = 0;
}

std::uint32_t Stream::next_u32() {
    if (used_ == 4) {
        refill();
    }
    return buffer_[used_++];
}

double Stream::uniform() {
    const std::uint64_t hi = next_u32() >> 5;  // 27 bits
    const std::uint64_t lo = next_u32() >> 6;  // 26 bits
    const std::uint64_t bits = (hi << 26) | lo;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
}

double Stream::exponential() { return -std::log(uniform()); }

Stream RngPolicy::stream(std::uint32_t experiment, std::uint64_t sample,
                         std::uint32_t substream) const {
    require(sample <= 0xFFFFFFFFull, "sample index exceeds 32-bit stream address space");
    return Stream(master_seed, experiment, static_cast<std::uint32_t>(sample), substream);
}

std::uint32_t experiment_id(std::string_view name) {
    std::uint32_t hash = 2166136261u;
    for (const char c : name) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 16777619u;
    }
    return hash;
}

}  // namespace jumplab
