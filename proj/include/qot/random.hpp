// random.hpp
// Deterministic counter-based random streams for reproducible protocol runs.
//
// Every party and every trial draws from its own named stream. A stream is
// keyed by (seed, label, trial) and produces SplitMix64 outputs of an
// incrementing counter, so streams never share state and a trial's draws do
// not depend on the order in which trials are executed.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace qot {

namespace detail {

constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// A single bit as produced by a fair coin or carried by a photon.
using Bit = std::uint8_t;

class RandomSource {
  public:
    using result_type = std::uint64_t;

    RandomSource(std::uint64_t seed, std::string_view label, std::uint64_t trial = 0) noexcept
        : key_(derive_key(seed, label, trial)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        counter_ += kGamma;
        ++draws_;
        return detail::splitmix_finalize(key_ + counter_);
    }

    // Fair coin: 0 or 1 with probability 1/2 each. Bits are taken from a
    // buffered 64-bit word, lowest bit first.
    Bit bit() noexcept {
        if (bits_left_ == 0) {
            buffer_ = (*this)();
            bits_left_ = 64;
        }
        const Bit b = static_cast<Bit>(buffer_ & 1U);
        buffer_ >>= 1;
        --bits_left_;
        return b;
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Uniform integer in [0, bound). Lemire's nearly-divisionless method.
    std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1) return 0;
        unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    // Number of 64-bit words drawn so far.
    std::uint64_t position() const noexcept { return draws_; }

  private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t derive_key(std::uint64_t seed, std::string_view label,
                                    std::uint64_t trial) noexcept {
        std::uint64_t k = detail::splitmix_finalize(seed ^ 0x6a09e667f3bcc909ULL);
        k = detail::splitmix_finalize(k ^ detail::fnv1a(label));
        return detail::splitmix_finalize(k ^ (trial * 0xd1b54a32d192ed03ULL + 0x3c6ef372fe94f82bULL));
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::uint64_t draws_ = 0;
    std::uint64_t buffer_ = 0;
    int bits_left_ = 0;
};

// Fisher-Yates shuffle driven by RandomSource::below, so the permutation is
// identical across standard library implementations.
template <typename T>
void shuffle(std::span<T> items, RandomSource& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

// Moves a uniformly random k-subset of items to the front (partial shuffle).
template <typename T>
void sample_front(std::span<T> items, std::size_t k, RandomSource& rng) {
    for (std::size_t i = 0; i < k && i < items.size(); ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(items.size() - i));
        using std::swap;
        swap(items[i], items[j]);
    }
}

}  // namespace qot
