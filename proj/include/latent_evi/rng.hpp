#pragma once

// Counter-based random streams.
//
// Every generator draws from a Stream: a 64-bit root key plus three 32-bit stream
// words. Draw j of a stream is Philox4x32-10 applied to the counter
// (j, word0, word1, word2) under the root key, so two streams that differ in any
// word never share a counter block, and a stream is reproducible no matter which
// thread or in what order it is consumed.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace latent_evi {

namespace philox {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

/// Philox4x32 with 10 rounds.
inline Block philox4x32_10(Block ctr, Key key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

}  // namespace philox

/// Identifies one reproducible substream.
struct Stream {
    std::uint64_t root = 0;
    std::array<std::uint32_t, 3> words{};

    friend bool operator==(const Stream&, const Stream&) = default;
};

/// Root seed of a study; substreams are derived by (scope, replicate, component).
struct Seed {
    std::uint64_t root = 0;

    Stream substream(std::uint32_t scope, std::uint32_t replicate, std::uint32_t component) const {
        return {root, {scope, replicate, component}};
    }
    Stream substream(std::uint32_t replicate, std::uint32_t component) const {
        return substream(0, replicate, component);
    }
};

/// 32-bit FNV-1a; maps component labels to stream words.
inline std::uint32_t label_hash(std::string_view label) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : label) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

/// UniformRandomBitGenerator over a Stream, plus the two continuous draws the simulators need.
class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit StreamRng(const Stream& stream)
        : key_{static_cast<std::uint32_t>(stream.root), static_cast<std::uint32_t>(stream.root >> 32)},
          words_(stream.words) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (lane_ == 2) refill();
        const result_type out = (static_cast<result_type>(buf_[2 * lane_]) << 32) | buf_[2 * lane_ + 1];
        ++lane_;
        return out;
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint32_t blocks_drawn() const { return block_; }

private:
    void refill() {
        buf_ = philox::philox4x32_10({block_, words_[0], words_[1], words_[2]}, key_);
        ++block_;
        lane_ = 0;
    }

    philox::Key key_;
    std::array<std::uint32_t, 3> words_;
    philox::Block buf_{};
    std::uint32_t block_ = 0;
    int lane_ = 2;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace latent_evi
