#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's statistic or special-function code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Asymptotic Kolmogorov survival Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_sf(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS p-value (asymptotic) of data against a CDF.
inline double one_sample_ks_pvalue(std::vector<double> data, const std::function<double(double)>& cdf) {
    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    double d = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double f = cdf(data[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return kolmogorov_sf(std::sqrt(n) * d);
}

/// Two-sample two-sided KS p-value (asymptotic).
inline double two_sample_ks_pvalue(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    double d = 0.0;
    for (double t : pooled) {
        const double fa = static_cast<double>(std::upper_bound(a.begin(), a.end(), t) - a.begin()) / a.size();
        const double fb = static_cast<double>(std::upper_bound(b.begin(), b.end(), t) - b.begin()) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    return kolmogorov_sf(std::sqrt(na * nb / (na + nb)) * d);
}

/// V_{m,s} for s = 1..m+n-1 by direct counting against every pooled value.
inline std::vector<std::int64_t> profile(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());
    std::vector<std::int64_t> v;
    for (std::size_t s = 1; s < pooled.size(); ++s) {
        const double t = pooled[s - 1];
        v.push_back(std::count_if(x.begin(), x.end(), [&](double xi) { return xi <= t; }));
    }
    return v;
}

inline double wilcoxon_u(const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0.0;
    for (double xi : x)
        for (double yj : y) u += xi < yj ? 1.0 : 0.0;
    return u;
}

/// max(0, max over pooled t of F_m(t) - G_n(t)) by direct counting.
inline double ks_one_sided(const std::vector<double>& x, const std::vector<double>& y) {
    double best = 0.0;
    auto ecdf = [](const std::vector<double>& s, double t) {
        return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v <= t; })) / s.size();
    };
    for (double t : x) best = std::max(best, ecdf(x, t) - ecdf(y, t));
    for (double t : y) best = std::max(best, ecdf(x, t) - ecdf(y, t));
    return best;
}

inline double tail_run(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<std::pair<double, int>> labelled;
    for (double v : x) labelled.emplace_back(v, 0);
    for (double v : y) labelled.emplace_back(v, 1);
    std::sort(labelled.begin(), labelled.end(), [](auto a, auto b) { return a.first > b.first; });
    double run = 0.0;
    for (auto [v, lab] : labelled) {
        if (lab != 1) break;
        run += 1.0;
    }
    return run;
}

/// Calls fn(labels) for every arrangement of m zeros (x) and n ones (y),
/// labels listed from smallest to largest pooled value.
inline void for_each_arrangement(int m, int n, const std::function<void(const std::vector<int>&)>& fn) {
    const int total = m + n;
    std::vector<int> labels(total);
    for (std::uint32_t mask = 0; mask < (1u << total); ++mask) {
        if (__builtin_popcount(mask) != n) continue;
        for (int k = 0; k < total; ++k) labels[k] = (mask >> k) & 1u;
        fn(labels);
    }
}

/// Adaptive Simpson quadrature on a finite interval.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 50) {
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps, int d) {
            const double mid = 0.5 * (lo + hi);
            const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
            const double flm = f(lm), frm = f(rm);
            const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
            const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
            if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
            return rec(lo, mid, flo, flm, fmid, left, eps / 2.0, d - 1) + rec(mid, hi, fmid, frm, fhi, right, eps / 2.0, d - 1);
        };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

/// Random tie-free two-sample data from std::normal_distribution.
inline std::pair<std::vector<double>, std::vector<double>> random_samples(std::mt19937_64& gen, std::size_t m,
                                                                          std::size_t n, double shift = 0.0) {
    std::normal_distribution<double> z;
    std::vector<double> x(m), y(n);
    for (auto& v : x) v = z(gen);
    for (auto& v : y) v = z(gen) + shift;
    return {x, y};
}

}  // namespace oracle
