// Exhaustive enumeration of the 2^N match patterns of the survivors.
// Each pattern is played through removal and subset building slot by slot,
// without the closed-form thresholds the oracle uses.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qot/oracle.hpp"
#include "qot/params.hpp"

namespace qot::testing {

enum class Removal { Compliant, MismatchesFirst };

struct Played {
    bool removal_ok = false;
    std::int64_t all_match_subsets = 0;  // disjoint all-matching subsets Bob can form
};

inline Played play(std::uint32_t mask, const ProtocolParams& p, Removal removal) {
    const auto N = static_cast<int>(p.N);
    std::vector<bool> alive(static_cast<std::size_t>(N), true);
    auto matches = [&](int slot) { return ((mask >> slot) & 1U) != 0; };

    Played out;
    std::int64_t removed = 0;
    auto remove_where = [&](bool want) {
        for (int slot = 0; slot < N && removed < p.x; ++slot) {
            if (alive[static_cast<std::size_t>(slot)] && matches(slot) == want) {
                alive[static_cast<std::size_t>(slot)] = false;
                ++removed;
            }
        }
    };
    if (removal == Removal::Compliant) {
        remove_where(p.rate_case == RateCase::Low);
    } else {
        remove_where(false);
        remove_where(true);
    }
    out.removal_ok = removed == p.x;
    if (!out.removal_ok) return out;

    // Fill subsets one at a time from the surviving matching slots.
    std::int64_t in_subset = 0;
    for (int slot = 0; slot < N; ++slot) {
        if (!alive[static_cast<std::size_t>(slot)] || !matches(slot)) continue;
        if (++in_subset == p.subset_size) {
            ++out.all_match_subsets;
            in_subset = 0;
        }
    }
    if (out.all_match_subsets > p.n) out.all_match_subsets = p.n;
    return out;
}

inline bool brute_event(oracle::Event event, std::uint32_t mask, const ProtocolParams& p) {
    switch (event) {
        case oracle::Event::Correctness: {
            const auto r = play(mask, p, Removal::Compliant);
            return !r.removal_ok || r.all_match_subsets < p.m;
        }
        case oracle::Event::PrivacyGreedy: {
            const auto r = play(mask, p, Removal::Compliant);
            return r.removal_ok && r.all_match_subsets >= p.m + 1;
        }
        case oracle::Event::DishonestRemoval: {
            const auto r = play(mask, p, Removal::MismatchesFirst);
            return r.removal_ok && r.all_match_subsets >= p.m + 1;
        }
    }
    return false;
}

inline oracle::BigRational brute_force_probability(const ProtocolParams& p, oracle::Event event) {
    if (p.N > 20) throw std::invalid_argument("brute force limited to N <= 20");
    const std::uint32_t patterns = 1U << p.N;
    std::uint64_t hits = 0;
    for (std::uint32_t mask = 0; mask < patterns; ++mask)
        if (brute_event(event, mask, p)) ++hits;
    return oracle::BigRational(oracle::BigInt(hits), oracle::BigInt(patterns));
}

}  // namespace qot::testing
