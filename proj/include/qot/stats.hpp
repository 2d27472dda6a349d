// stats.hpp
// Interval estimates and the hypothesis tests used by the harness.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace qot::stats {

// Two-sided 99% normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

struct Interval {
    double lower = 0.0;
    double upper = 1.0;
};

inline Interval wilson(std::uint64_t successes, std::uint64_t trials, double z = kZ99) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

// Standard error of a sample proportion when the true rate is p.
inline double sampling_sigma(double p, std::uint64_t trials) {
    return std::sqrt(p * (1 - p) / static_cast<double>(trials));
}

// k sigma plus a half-count continuity term, so rates near zero with only a
// handful of expected events are not judged on a vanishing sigma.
inline double sigma_tolerance(double p, std::uint64_t trials, double k = 3.0) {
    return k * sampling_sigma(p, trials) + 0.5 / static_cast<double>(trials);
}

struct ChiSquare {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

// Homogeneity test over a two-row contingency table. Columns empty in both
// rows are dropped.
inline ChiSquare chi_square_homogeneity(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    std::vector<std::pair<double, double>> cols;
    double ta = 0;
    double tb = 0;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        const double x = i < a.size() ? static_cast<double>(a[i]) : 0.0;
        const double y = i < b.size() ? static_cast<double>(b[i]) : 0.0;
        if (x + y == 0) continue;
        cols.emplace_back(x, y);
        ta += x;
        tb += y;
    }
    ChiSquare out;
    if (cols.size() < 2 || ta == 0 || tb == 0) return out;
    const double total = ta + tb;
    for (const auto& [x, y] : cols) {
        const double col = x + y;
        const double ea = col * ta / total;
        const double eb = col * tb / total;
        out.statistic += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    out.dof = static_cast<int>(cols.size()) - 1;
    boost::math::chi_squared dist(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
    return out;
}

// Total variation distance between two empirical histograms.
inline double total_variation(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    double ta = 0;
    double tb = 0;
    for (auto v : a) ta += static_cast<double>(v);
    for (auto v : b) tb += static_cast<double>(v);
    if (ta == 0 || tb == 0) return 0.0;
    double tv = 0;
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        const double x = i < a.size() ? static_cast<double>(a[i]) / ta : 0.0;
        const double y = i < b.size() ? static_cast<double>(b[i]) / tb : 0.0;
        tv += std::abs(x - y);
    }
    return tv / 2;
}

struct ZTest {
    double z = 0.0;
    double p_value = 1.0;  // two-sided
};

// Pooled two-proportion z test.
inline ZTest two_proportion(std::uint64_t s1, std::uint64_t n1, std::uint64_t s2, std::uint64_t n2) {
    ZTest out;
    if (n1 == 0 || n2 == 0) return out;
    const double p1 = static_cast<double>(s1) / static_cast<double>(n1);
    const double p2 = static_cast<double>(s2) / static_cast<double>(n2);
    const double pool = static_cast<double>(s1 + s2) / static_cast<double>(n1 + n2);
    const double se = std::sqrt(pool * (1 - pool) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
    if (se == 0) return out;
    out.z = (p1 - p2) / se;
    out.p_value = std::erfc(std::abs(out.z) / std::sqrt(2.0));
    return out;
}

}  // namespace qot::stats
