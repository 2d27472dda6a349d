// oracle.hpp
// Exact event probabilities over the number of basis matches among the N
// surviving photons, M ~ Binomial(N, 1/2).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "qot/params.hpp"

namespace qot::oracle {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

enum class Event : std::uint8_t {
    Correctness,       // honest run aborts
    PrivacyGreedy,     // compliant Bob can fill m+1 all-matching subsets
    DishonestRemoval,  // low case, Bob removes mismatches first
};

inline const char* to_string(Event e) noexcept {
    switch (e) {
        case Event::Correctness: return "correctness";
        case Event::PrivacyGreedy: return "privacy";
        case Event::DishonestRemoval: return "dishonest-removal";
    }
    return "?";
}

inline std::optional<Event> event_from_string(std::string_view s) {
    for (auto e : {Event::Correctness, Event::PrivacyGreedy, Event::DishonestRemoval})
        if (s == to_string(e)) return e;
    return std::nullopt;
}

// Whether the event holds when `matches` of the N survivors match.
inline bool event_holds(Event event, const ProtocolParams& p, std::int64_t matches) {
    const std::int64_t mismatches = p.N - matches;
    const std::int64_t s = p.subset_size;
    const bool low = p.rate_case == RateCase::Low;
    switch (event) {
        case Event::Correctness:
            return low ? matches < p.x + p.m * s : (matches < p.m * s || mismatches < p.x);
        case Event::PrivacyGreedy:
            return low ? matches >= p.x + (p.m + 1) * s : (matches >= (p.m + 1) * s && mismatches >= p.x);
        case Event::DishonestRemoval:
            if (!low) throw std::invalid_argument("dishonest-removal event is defined for the low-rate case only");
            return matches >= (p.m + 1) * s;
    }
    return false;
}

inline BigInt binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0;
    BigInt c = 1;
    for (std::int64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

struct Probability {
    BigRational exact;
    double value = 0.0;

    std::string exact_string() const {
        return boost::multiprecision::numerator(exact).str() + "/" + boost::multiprecision::denominator(exact).str();
    }
};

inline double to_double(const BigRational& r) { return r.convert_to<double>(); }

// Sum of exact Binomial(N, 1/2) point masses over the event.
inline Probability exact_failure_oracle(const ProtocolParams& params, Event event) {
    BigInt total = 0;
    BigInt c = 1;  // C(N, k)
    for (std::int64_t k = 0; k <= params.N; ++k) {
        if (event_holds(event, params, k)) total += c;
        c = c * (params.N - k) / (k + 1);
    }
    Probability out;
    out.exact = BigRational(total, BigInt(1) << static_cast<unsigned>(params.N));
    out.value = to_double(out.exact);
    return out;
}

// P[Binomial(N, 1/2) <= k].
inline BigRational binomial_cdf_half(std::int64_t N, std::int64_t k) {
    BigInt total = 0;
    BigInt c = 1;
    for (std::int64_t i = 0; i <= std::min(k, N); ++i) {
        total += c;
        c = c * (N - i) / (i + 1);
    }
    return BigRational(total, BigInt(1) << static_cast<unsigned>(N));
}

// Postponing Bob is caught at each challenge with probability 1/4.
inline Probability postpone_survival(std::int64_t N) {
    Probability out;
    out.exact = BigRational(boost::multiprecision::pow(BigInt(3), static_cast<unsigned>(N)),
                            BigInt(1) << static_cast<unsigned>(2 * N));
    out.value = to_double(out.exact);
    return out;
}

// Every one of the (N-x)/n forged unveils accepted.
inline double commit_cheat_success(const ProtocolParams& params, double p) {
    return std::pow(p, static_cast<double>(params.subset_size));
}

// Curious Alice guessing uniformly among C(n, m) choice vectors.
inline double uniform_guess_accuracy(std::int64_t n, std::int64_t m) {
    return 1.0 / binomial(n, m).convert_to<double>();
}

}  // namespace qot::oracle
