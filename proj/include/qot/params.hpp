// params.hpp
// Protocol parameters, admissibility of N, and the security bounds.
//
// Admissibility decisions use exact integer/rational arithmetic only. The
// deviations are exact rationals; exponentials are evaluated in double.

#pragma once

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qot {

using Rational = boost::rational<std::int64_t>;

// Low: target rate (2m+1)/(2n) below 1/2, Bob removes matching indices.
// High: target rate at least 1/2, Bob removes mismatching indices.
enum class RateCase : std::uint8_t { Low, High };

inline const char* to_string(RateCase c) noexcept { return c == RateCase::Low ? "low" : "high"; }

enum class ParamViolation : std::uint8_t { InvalidN, InvalidChoiceCount };

inline const char* to_string(ParamViolation v) noexcept {
    return v == ParamViolation::InvalidN ? "InvalidN" : "InvalidChoiceCount";
}

struct Violation {
    ParamViolation code;
    std::string message;
};

class ParameterError : public std::invalid_argument {
  public:
    explicit ParameterError(std::vector<Violation> violations)
        : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}

    const std::vector<Violation>& violations() const noexcept { return violations_; }

    bool has(ParamViolation code) const noexcept {
        for (const auto& v : violations_)
            if (v.code == code) return true;
        return false;
    }

  private:
    static std::string join(const std::vector<Violation>& vs) {
        std::string out;
        for (const auto& v : vs) {
            if (!out.empty()) out += "; ";
            out += to_string(v.code);
            out += ": ";
            out += v.message;
        }
        return out;
    }

    std::vector<Violation> violations_;
};

struct ProtocolParams {
    std::int64_t n = 0;            // Alice's bit count
    std::int64_t m = 0;            // Bob's choice count
    std::int64_t N = 0;            // index count after the challenge phase
    RateCase rate_case = RateCase::High;
    std::int64_t x = 0;            // removal count
    std::int64_t subset_size = 0;  // (N - x) / n
    Rational target_rate{0};

    std::int64_t survivors() const noexcept { return N - x; }
};

namespace detail {

inline void require_choice_count(std::int64_t n, std::int64_t m) {
    if (m < 1 || m >= n)
        throw ParameterError({{ParamViolation::InvalidChoiceCount,
                               "need 1 <= m < n, got n=" + std::to_string(n) + ", m=" + std::to_string(m)}});
}

}  // namespace detail

inline Rational target_rate(std::int64_t n, std::int64_t m) {
    detail::require_choice_count(n, m);
    return Rational(2 * m + 1, 2 * n);
}

inline RateCase rate_case(std::int64_t n, std::int64_t m) {
    detail::require_choice_count(n, m);
    return 2 * m + 1 < n ? RateCase::Low : RateCase::High;
}

// Numerator and denominator of x = num * N / den for the case of (n, m).
struct RemovalFraction {
    std::int64_t num;
    std::int64_t den;
};

inline RemovalFraction removal_fraction(std::int64_t n, std::int64_t m) {
    if (rate_case(n, m) == RateCase::Low) return {n - (2 * m + 1), 2 * n - (2 * m + 1)};
    return {(2 * m + 1) - n, 2 * m + 1};
}

inline std::int64_t compute_x(std::int64_t n, std::int64_t m, std::int64_t N) {
    const auto [num, den] = removal_fraction(n, m);
    if (N < 1) throw ParameterError({{ParamViolation::InvalidN, "N must be >= 1, got " + std::to_string(N)}});
    if ((num * N) % den != 0)
        throw ParameterError({{ParamViolation::InvalidN,
                               "x = " + std::to_string(num) + "*N/" + std::to_string(den) +
                                   " is not an integer for N=" + std::to_string(N) + "; need " +
                                   std::to_string(den) + " | " + std::to_string(num) + "*N"}});
    return num * N / den;
}

// Every violated constraint, empty iff (n, m, N) is admissible.
inline std::vector<Violation> check_params(std::int64_t n, std::int64_t m, std::int64_t N) {
    std::vector<Violation> out;
    const bool choices_ok = m >= 1 && m < n;
    if (!choices_ok)
        out.push_back({ParamViolation::InvalidChoiceCount,
                       "need 1 <= m < n, got n=" + std::to_string(n) + ", m=" + std::to_string(m)});
    if (N < 1) {
        out.push_back({ParamViolation::InvalidN, "N must be >= 1, got " + std::to_string(N)});
        return out;
    }
    if (!choices_ok) return out;

    const auto [num, den] = removal_fraction(n, m);
    if ((num * N) % den != 0) {
        out.push_back({ParamViolation::InvalidN, "x = " + std::to_string(num) + "*N/" + std::to_string(den) +
                                                     " is not an integer for N=" + std::to_string(N)});
        return out;
    }
    const std::int64_t x = num * N / den;
    if ((N - x) % n != 0)
        out.push_back({ParamViolation::InvalidN, "subset size (N-x)/n = " + std::to_string(N - x) + "/" +
                                                     std::to_string(n) + " is not an integer"});
    return out;
}

inline ProtocolParams validate_params(std::int64_t n, std::int64_t m, std::int64_t N) {
    if (auto violations = check_params(n, m, N); !violations.empty()) throw ParameterError(std::move(violations));
    ProtocolParams p;
    p.n = n;
    p.m = m;
    p.N = N;
    p.rate_case = rate_case(n, m);
    p.x = compute_x(n, m, N);
    p.subset_size = (N - p.x) / n;
    p.target_rate = target_rate(n, m);
    return p;
}

inline bool is_admissible(std::int64_t n, std::int64_t m, std::int64_t N) { return check_params(n, m, N).empty(); }

// Least N >= floor that passes validate_params. Admissibility is periodic in
// N with period dividing n * den, so the scan is bounded.
inline std::int64_t smallest_valid_N(std::int64_t n, std::int64_t m, std::int64_t floor) {
    if (floor < 1) floor = 1;
    const auto [num, den] = removal_fraction(n, m);
    (void)num;
    for (std::int64_t N = floor; N <= floor + n * den; ++N)
        if (is_admissible(n, m, N)) return N;
    throw std::logic_error("smallest_valid_N: no admissible N within one period");
}

// The single divisibility condition stated with the original construction:
// (2n-(2m+1))(2m+1) | ((2m+1)-n) N. Kept for comparison with check_params.
inline bool stated_divisibility_condition(std::int64_t n, std::int64_t m, std::int64_t N) {
    const std::int64_t modulus = (2 * n - (2 * m + 1)) * (2 * m + 1);
    const std::int64_t value = ((2 * m + 1) - n) * N;
    return value % modulus == 0;
}

// ---------------------------------------------------------------------------
// Bounds

struct HoeffdingQuery {
    std::int64_t trials = 0;
    double deviation = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    double mean = 0.5;
};

// 2 exp(-2 N d^2 / (b - a)). May exceed 1, in which case the bound is vacuous.
inline double hoeffding_bound(const HoeffdingQuery& q) {
    if (!(q.deviation > 0.0)) throw std::invalid_argument("hoeffding_bound: deviation must be > 0");
    if (!(q.lower < q.upper)) throw std::invalid_argument("hoeffding_bound: need lower < upper");
    return 2.0 * std::exp(-2.0 * static_cast<double>(q.trials) * q.deviation * q.deviation / (q.upper - q.lower));
}

inline double to_double(const Rational& r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

struct Deviation {
    Rational stated;        // deviation exactly as derived, may be negative
    Rational delta;         // |stated|, used for every bound
    double epsilon = 1.0;   // exp(-delta^2)
    bool sign_claim_holds;  // stated > 0

    // Fair-coin Hoeffding bound 2 exp(-2 N delta^2).
    double hoeffding(std::int64_t N) const { return hoeffding_bound({N, to_double(delta)}); }
    // Simplified form epsilon^N = exp(-N delta^2).
    double epsilon_pow(std::int64_t N) const {
        const double d = to_double(delta);
        return std::exp(-static_cast<double>(N) * d * d);
    }
};

namespace detail {

inline Deviation make_deviation(Rational stated) {
    Deviation d{stated, boost::abs(stated), 1.0, stated > Rational(0)};
    if (d.delta == Rational(0)) throw std::logic_error("deviation vanished");
    const double v = to_double(d.delta);
    d.epsilon = std::exp(-v * v);
    return d;
}

}  // namespace detail

// Deviation bounding the event that Bob cannot form his m subsets.
inline Deviation correctness_epsilon(std::int64_t n, std::int64_t m) {
    if (rate_case(n, m) == RateCase::Low)
        return detail::make_deviation(Rational(n - m, 2 * n - (2 * m + 1)) - Rational(1, 2));
    return detail::make_deviation(Rational(1, 2) - Rational(m, 2 * m + 1));
}

// Deviation bounding the event that Bob can form m+1 all-matching subsets.
// In the low case the stated expression 1/2 - (n-m)/(2n-(2m+1)) is negative;
// its magnitude is the deviation of the event and sign_claim_holds is false.
inline Deviation privacy_epsilon(std::int64_t n, std::int64_t m) {
    if (rate_case(n, m) == RateCase::Low)
        return detail::make_deviation(Rational(1, 2) - Rational(n - m, 2 * n - (2 * m + 1)));
    return detail::make_deviation(Rational(m + 1, 2 * m + 1) - Rational(1, 2));
}

// Least integer N with N > ln 2 / delta^2.
inline std::int64_t min_N(const Rational& delta) {
    if (delta <= Rational(0)) throw std::invalid_argument("min_N: deviation must be > 0");
    const Rational sq = delta * delta;
    const double threshold =
        std::numbers::ln2 * static_cast<double>(sq.denominator()) / static_cast<double>(sq.numerator());
    return static_cast<std::int64_t>(std::floor(threshold)) + 1;
}

struct CommitmentAttackBound {
    double bound = 0.0;          // p^((N-x)/n)
    double epsilon = 0.0;        // p^(1/(2n))
    double epsilon_pow_N = 0.0;  // epsilon^N
    bool dominated = false;      // bound < epsilon^N
};

inline CommitmentAttackBound commitment_attack_bound(double p, std::int64_t n, std::int64_t N, std::int64_t x) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("commitment_attack_bound: p must lie in (0, 1)");
    if (n < 1 || N < 1 || x < 0 || x > N || (N - x) % n != 0)
        throw std::invalid_argument("commitment_attack_bound: need n | (N - x)");
    CommitmentAttackBound out;
    const double forgeries = static_cast<double>((N - x) / n);
    out.bound = std::pow(p, forgeries);
    out.epsilon = std::pow(p, 1.0 / (2.0 * static_cast<double>(n)));
    out.epsilon_pow_N = std::pow(p, static_cast<double>(N) / (2.0 * static_cast<double>(n)));
    // Strict whenever (N-x)/n > N/(2n), i.e. x < N/2, which every admissible
    // parameter set satisfies.
    out.dominated = out.bound < out.epsilon_pow_N;
    return out;
}

// Human-readable closed form of 2 exp(-2 N delta^2), e.g. "2*exp(-N/18)".
inline std::string hoeffding_form(const Rational& delta) {
    const Rational rate = 2 * delta * delta;
    if (rate.numerator() == 1) return "2*exp(-N/" + std::to_string(rate.denominator()) + ")";
    return "2*exp(-N*" + std::to_string(rate.numerator()) + "/" + std::to_string(rate.denominator()) + ")";
}

inline std::string rational_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

struct BoundReport {
    std::int64_t n = 0;
    std::int64_t m = 0;
    RateCase rate_case = RateCase::High;
    Rational target_rate{0};
    Deviation correctness;
    Deviation privacy;
    double eps_correctness = 0.0;
    double eps_privacy = 0.0;
    std::int64_t min_N_correctness = 0;
    std::int64_t min_N_privacy = 0;
    std::string correctness_bound_form;
    std::string privacy_bound_form;

    // Evaluated at a concrete admissible N.
    std::optional<ProtocolParams> params;
    double bound_correctness = 0.0;  // 2 exp(-2 N delta_c^2)
    double bound_privacy = 0.0;      // 2 exp(-2 N delta_p^2)
    double eps_correctness_pow_N = 0.0;
    double eps_privacy_pow_N = 0.0;

    std::optional<double> p;
    std::optional<CommitmentAttackBound> commitment;
};

inline BoundReport make_bound_report(std::int64_t n, std::int64_t m, std::optional<std::int64_t> N,
                                     std::optional<double> p) {
    BoundReport r;
    r.n = n;
    r.m = m;
    r.rate_case = rate_case(n, m);
    r.target_rate = target_rate(n, m);
    r.correctness = correctness_epsilon(n, m);
    r.privacy = privacy_epsilon(n, m);
    r.eps_correctness = r.correctness.epsilon;
    r.eps_privacy = r.privacy.epsilon;
    r.min_N_correctness = min_N(r.correctness.delta);
    r.min_N_privacy = min_N(r.privacy.delta);
    r.correctness_bound_form = hoeffding_form(r.correctness.delta);
    r.privacy_bound_form = hoeffding_form(r.privacy.delta);

    const std::int64_t n_eval =
        N ? *N : smallest_valid_N(n, m, std::max(r.min_N_correctness, r.min_N_privacy));
    r.params = validate_params(n, m, n_eval);
    r.bound_correctness = r.correctness.hoeffding(n_eval);
    r.bound_privacy = r.privacy.hoeffding(n_eval);
    r.eps_correctness_pow_N = r.correctness.epsilon_pow(n_eval);
    r.eps_privacy_pow_N = r.privacy.epsilon_pow(n_eval);
    if (p) {
        r.p = p;
        r.commitment = commitment_attack_bound(*p, n, n_eval, r.params->x);
    }
    return r;
}

}  // namespace qot
