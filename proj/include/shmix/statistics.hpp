#pragma once

// Two-sample detection statistics. Every statistic rejects for large values
// under the alternative in which Y is shifted upward.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "shmix/distributions.hpp"
#include "shmix/error.hpp"

namespace shmix {

enum class StatId : std::uint8_t { HC = 0, Wilcoxon = 1, KS = 2, TailRun = 3, LRT = 4 };

inline constexpr StatId kAllStats[] = {StatId::LRT, StatId::HC, StatId::Wilcoxon, StatId::KS, StatId::TailRun};

inline std::string_view to_string(StatId id) {
    switch (id) {
        case StatId::HC: return "HC";
        case StatId::Wilcoxon: return "WILCOXON";
        case StatId::KS: return "KS";
        case StatId::TailRun: return "TAILRUN";
        case StatId::LRT: return "LRT";
    }
    return "?";
}

inline std::optional<StatId> parse_stat_id(std::string_view text) {
    std::string upper;
    for (char c : text) {
        if (c == '-' || c == '_') continue;
        upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    if (upper == "HC") return StatId::HC;
    if (upper == "WILCOXON" || upper == "U") return StatId::Wilcoxon;
    if (upper == "KS") return StatId::KS;
    if (upper == "TAILRUN") return StatId::TailRun;
    if (upper == "LRT") return StatId::LRT;
    return std::nullopt;
}

struct StatValue {
    StatId id;
    double value;
    bool rejects_for_large = true;
};

/// Control sample x (from F) and test sample y (from G). Values must be finite
/// and both samples nonempty; ties are detected when the samples are ranked.
class TwoSample {
public:
    TwoSample(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        if (x_.empty() || y_.empty()) throw DomainError("both samples must be nonempty");
        for (double v : x_) {
            if (!std::isfinite(v)) throw DomainError("x sample contains a non-finite value");
        }
        for (double v : y_) {
            if (!std::isfinite(v)) throw DomainError("y sample contains a non-finite value");
        }
    }

    std::span<const double> x() const noexcept { return x_; }
    std::span<const double> y() const noexcept { return y_; }
    std::size_t m() const noexcept { return x_.size(); }
    std::size_t n() const noexcept { return y_.size(); }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

enum class TiePolicy {
    Reject,         // throw TiesError on any repeated pooled value
    BreakBySample,  // order equal values x before y; simulation only
};

/// The pooled sample sorted ascending, with the origin of every entry.
class PooledOrder {
public:
    explicit PooledOrder(const TwoSample& ts, TiePolicy policy = TiePolicy::Reject)
        : m_(ts.m()), n_(ts.n()), x_(ts.x().begin(), ts.x().end()), y_(ts.y().begin(), ts.y().end()) {
        std::sort(x_.begin(), x_.end());
        std::sort(y_.begin(), y_.end());
        if (policy == TiePolicy::Reject) {
            check_within(x_);
            check_within(y_);
        }
        from_x_.resize(m_ + n_);
        std::size_t i = 0, j = 0, k = 0;
        while (i < m_ && j < n_) {
            if (x_[i] == y_[j] && policy == TiePolicy::Reject) throw_tie(x_[i]);
            if (x_[i] <= y_[j]) {
                from_x_[k++] = 1;
                ++i;
            } else {
                from_x_[k++] = 0;
                ++j;
            }
        }
        while (i < m_) from_x_[k++] = 1, ++i;
        while (j < n_) from_x_[k++] = 0, ++j;
    }

    std::size_t m() const noexcept { return m_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return m_ + n_; }

    /// from_x()[k] is 1 when the (k+1)-th smallest pooled value came from x.
    std::span<const std::uint8_t> from_x() const noexcept { return from_x_; }
    std::span<const double> sorted_x() const noexcept { return x_; }
    std::span<const double> sorted_y() const noexcept { return y_; }

private:
    static void check_within(const std::vector<double>& sorted) {
        auto it = std::adjacent_find(sorted.begin(), sorted.end());
        if (it != sorted.end()) throw_tie(*it);
    }

    [[noreturn]] static void throw_tie(double v) {
        throw TiesError("tied value " + format_value(v) + " appears more than once in the pooled sample", v);
    }

    std::size_t m_;
    std::size_t n_;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<std::uint8_t> from_x_;
};

/// v[s-1] = V_{m,s}: how many of the s smallest pooled values come from x,
/// for s = 1..m+n-1.
struct RankProfile {
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<std::int64_t> v;

    std::int64_t at(std::size_t s) const { return v.at(s - 1); }
};

inline RankProfile rank_profile(const PooledOrder& order) {
    RankProfile profile{order.m(), order.n(), {}};
    const std::size_t total = order.size();
    profile.v.resize(total - 1);
    std::int64_t count = 0;
    auto labels = order.from_x();
    for (std::size_t s = 0; s + 1 < total; ++s) {
        count += labels[s];
        profile.v[s] = count;
    }
    return profile;
}

inline RankProfile rank_profile(const TwoSample& ts) { return rank_profile(PooledOrder(ts)); }

/// Rank form: max over s of sqrt(N/(N-1)) (V_s - m s/N) / sqrt(Var0 V_s), with
/// the hypergeometric null variance m n s (N - s) / (N^2 (N - 1)).
inline StatValue hc_stat(const RankProfile& profile) {
    const double m = static_cast<double>(profile.m);
    const double n = static_cast<double>(profile.n);
    const double total = m + n;
    const double inflate = std::sqrt(total / (total - 1.0));
    double best = -INFINITY;
    for (std::size_t k = 0; k < profile.v.size(); ++k) {
        const double s = static_cast<double>(k + 1);
        const double mean = m * s / total;
        const double var = m * n * s * (total - s) / (total * total * (total - 1.0));
        best = std::max(best, inflate * (static_cast<double>(profile.v[k]) - mean) / std::sqrt(var));
    }
    return {StatId::HC, best};
}

inline StatValue hc_stat(const TwoSample& ts) { return hc_stat(rank_profile(ts)); }

/// Empirical-CDF form, evaluated at the pooled order statistics Z_(1..N-1).
/// Sorts the pooled values itself and counts each sample by binary search, so
/// it shares no code path with the rank profile.
inline StatValue hc_stat_sup_form(const TwoSample& ts) {
    std::vector<double> xs(ts.x().begin(), ts.x().end());
    std::vector<double> ys(ts.y().begin(), ts.y().end());
    std::vector<double> pooled(xs);
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    std::sort(pooled.begin(), pooled.end());
    if (auto it = std::adjacent_find(pooled.begin(), pooled.end()); it != pooled.end()) {
        throw TiesError("tied value " + format_value(*it) + " appears more than once in the pooled sample", *it);
    }

    const double m = static_cast<double>(xs.size());
    const double n = static_cast<double>(ys.size());
    const double total = m + n;
    const double lead = std::sqrt(m * n / total);
    double best = -INFINITY;
    for (std::size_t k = 0; k + 1 < pooled.size(); ++k) {
        const double t = pooled[k];
        const double fm = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), t) - xs.begin()) / m;
        const double gn = static_cast<double>(std::upper_bound(ys.begin(), ys.end(), t) - ys.begin()) / n;
        const double h = (m * fm + n * gn) / total;
        best = std::max(best, lead * (fm - gn) / std::sqrt(h * (1.0 - h)));
    }
    return {StatId::HC, best};
}

/// U = #{(i, j) : x_i < y_j}, one merge pass.
inline StatValue wilcoxon_u(const PooledOrder& order) {
    std::int64_t below = 0;
    std::int64_t u = 0;
    for (auto label : order.from_x()) {
        if (label) {
            ++below;
        } else {
            u += below;
        }
    }
    return {StatId::Wilcoxon, static_cast<double>(u)};
}

inline StatValue wilcoxon_u(const TwoSample& ts) { return wilcoxon_u(PooledOrder(ts)); }

struct KsStat {
    StatValue d;    // sup_t [F_m(t) - G_n(t)], never negative
    double lambda;  // sqrt(m n / (m + n)) * d
};

inline KsStat ks_one_sided(const RankProfile& profile) {
    const double m = static_cast<double>(profile.m);
    const double n = static_cast<double>(profile.n);
    // t below every observation gives F_m - G_n = 0.
    double best = 0.0;
    for (std::size_t k = 0; k < profile.v.size(); ++k) {
        const double v = static_cast<double>(profile.v[k]);
        const double s = static_cast<double>(k + 1);
        best = std::max(best, v / m - (s - v) / n);
    }
    return {{StatId::KS, best}, std::sqrt(m * n / (m + n)) * best};
}

inline KsStat ks_one_sided(const TwoSample& ts) { return ks_one_sided(rank_profile(ts)); }

/// Length of the run of y-values at the top of the pooled ordering.
inline StatValue tail_run(const PooledOrder& order) {
    auto labels = order.from_x();
    std::size_t run = 0;
    for (auto it = labels.rbegin(); it != labels.rend() && *it == 0; ++it) ++run;
    return {StatId::TailRun, static_cast<double>(run)};
}

inline StatValue tail_run(const TwoSample& ts) { return tail_run(PooledOrder(ts)); }

/// log(1 - eps + eps e^d) for d = log f(y - mu) - log f(y), without overflow.
inline double log_mixture_ratio(double d, double eps) {
    if (!std::isfinite(d)) throw NumericError("likelihood ratio term is not finite");
    if (d <= 30.0) return std::log1p(eps * std::expm1(d));
    return d + std::log(eps) + std::log1p((1.0 - eps) * std::exp(-d) / eps);
}

/// Oracle log-likelihood ratio of G against F on the y sample alone; with F
/// known the control sample carries no information.
inline StatValue lrt_stat(std::span<const double> y, const GGParams& p, const MixtureAlt& alt) {
    if (y.empty()) throw DomainError("lrt_stat: y sample must be nonempty");
    double total = 0.0;
    for (double v : y) {
        const double d = p.energy(v) - p.energy(v - alt.mu());
        total += log_mixture_ratio(d, alt.epsilon());
    }
    if (!std::isfinite(total)) throw NumericError("lrt_stat: log-likelihood ratio is not finite");
    return {StatId::LRT, total};
}

/// HC, U, D and L* from one ordering.
struct RankStatistics {
    double hc;
    double wilcoxon;
    double ks;
    double ks_lambda;
    double tail_run;
};

inline RankStatistics rank_statistics(const PooledOrder& order) {
    const RankProfile profile = rank_profile(order);
    const KsStat ks = ks_one_sided(profile);
    return {hc_stat(profile).value, wilcoxon_u(order).value, ks.d.value, ks.lambda, tail_run(order).value};
}

/// Breaks exact ties deterministically: values are visited in input order
/// (x first, then y) and each repeat is moved up by whole ulps until unique.
inline TwoSample dejitter(const TwoSample& ts) {
    std::unordered_set<double> seen;
    seen.reserve(ts.m() + ts.n());
    auto place = [&](double v) {
        while (!seen.insert(v).second) v = std::nextafter(v, INFINITY);
        return v;
    };
    std::vector<double> x, y;
    x.reserve(ts.m());
    y.reserve(ts.n());
    for (double v : ts.x()) x.push_back(place(v));
    for (double v : ts.y()) y.push_back(place(v));
    return TwoSample(std::move(x), std::move(y));
}

}  // namespace shmix
