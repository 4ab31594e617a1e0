#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace blpp {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
//
// Each call to the block function maps a 128-bit counter and a 64-bit key to
// 128 output bits through ten rounds of
//     (c0, c1, c2, c3) <- (hi(M1*c2) ^ c1 ^ k0, lo(M1*c2), hi(M0*c0) ^ c3 ^ k1, lo(M0*c0))
// with the key bumped by the Weyl constants (W0, W1) between rounds.
// The key is the 64-bit seed; counter words 2..3 hold a stream index so that
// independent sub-streams can be drawn from one seed. Only integer arithmetic
// is involved, so the output is identical on every platform.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr Block block(Block ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            ctr = Block{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                        static_cast<std::uint32_t>(p1),
                        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                        static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 2) refill();
        const result_type out = (static_cast<result_type>(buffer_[2 * used_ + 1]) << 32) |
                                buffer_[2 * used_];
        ++used_;
        return out;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1).
    double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    std::uint64_t blocks_used() const { return counter_; }

private:
    void refill() {
        const Block ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = block(ctr, key_);
        ++counter_;
        used_ = 0;
    }

    Key key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    Block buffer_{};
    int used_ = 2;
};

} // namespace blpp
