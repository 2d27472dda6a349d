// channel.hpp
// Idealized BB84 photon channel.
//
// A photon is a classical record (bit, emission basis) with a consumed flag.
// Measuring in the emission basis returns the encoded bit; measuring in the
// conjugate basis returns a fair coin. That is exact for single BB84 states,
// which are the only states the protocol prepares.

#pragma once

#include <stdexcept>
#include <string>

#include "qot/random.hpp"

namespace qot::channel {

enum class Basis : std::uint8_t {
    Rectilinear = 0,
    Diagonal = 1,
};

constexpr Basis basis_from_bit(Bit b) noexcept {
    return b == 0 ? Basis::Rectilinear : Basis::Diagonal;
}

constexpr Bit to_bit(Basis b) noexcept { return static_cast<Bit>(b); }

constexpr Basis conjugate(Basis b) noexcept {
    return b == Basis::Rectilinear ? Basis::Diagonal : Basis::Rectilinear;
}

constexpr char basis_symbol(Basis b) noexcept { return b == Basis::Rectilinear ? '+' : 'x'; }

// Raised when a photon is measured twice.
class ChannelMisuse : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

class Photon {
  public:
    Photon(Bit bit, Basis basis) noexcept : bit_(bit), basis_(basis) {}

    Bit bit() const noexcept { return bit_; }
    Basis basis() const noexcept { return basis_; }
    bool consumed() const noexcept { return consumed_; }

  private:
    friend Bit measure(Photon& photon, Basis basis, RandomSource& rng);
    friend void apply_noise(Photon& photon, double flip_probability, RandomSource& rng);

    Bit bit_;
    Basis basis_;
    bool consumed_ = false;
};

inline Photon encode(Bit r, Basis basis) {
    if (r > 1) throw std::invalid_argument("encode: bit must be 0 or 1, got " + std::to_string(r));
    return Photon{r, basis};
}

inline Bit measure(Photon& photon, Basis basis, RandomSource& rng) {
    if (photon.consumed_) throw ChannelMisuse("photon measured twice");
    photon.consumed_ = true;
    if (basis == photon.basis_) return photon.bit_;
    return rng.bit();
}

// Noise hook: flips the encoded bit in transit with the given probability.
// Protocol runs use 0 unless explicitly configured otherwise.
inline void apply_noise(Photon& photon, double flip_probability, RandomSource& rng) {
    if (flip_probability > 0.0 && rng.bernoulli(flip_probability)) photon.bit_ ^= 1U;
}

}  // namespace qot::channel
