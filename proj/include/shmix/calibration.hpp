#pragma once

// Null distributions and p-values: Monte Carlo tables for statistics without a
// usable closed-form null, limiting laws for U and the one-sided KS distance,
// and the exact negative hypergeometric law of the tail run.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "shmix/distributions.hpp"
#include "shmix/error.hpp"
#include "shmix/parallel.hpp"
#include "shmix/quadrature.hpp"
#include "shmix/rng.hpp"
#include "shmix/statistics.hpp"

namespace shmix {

enum class PValueMethod { MonteCarlo, NormalApprox, SmirnovLimit, Exact };

inline std::string_view to_string(PValueMethod method) {
    switch (method) {
        case PValueMethod::MonteCarlo: return "monte-carlo";
        case PValueMethod::NormalApprox: return "normal-approx";
        case PValueMethod::SmirnovLimit: return "smirnov-limit";
        case PValueMethod::Exact: return "exact";
    }
    return "?";
}

struct PValue {
    double p;
    PValueMethod method;
};

namespace detail {

// Keeps p-values strictly positive when a tail probability underflows.
inline double clamp_p(double p) { return std::clamp(p, std::numeric_limits<double>::min(), 1.0); }

inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

/// The model an LRT statistic is computed under.
struct LrtModel {
    GGParams model;
    MixtureAlt alt;

    friend bool operator==(const LrtModel&, const LrtModel&) = default;
};

inline constexpr std::size_t kMinNullReps = 100;

/// Sorted Monte Carlo draws of a statistic under H0.
struct NullTable {
    StatId statistic = StatId::HC;
    std::size_t m = 0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::optional<LrtModel> lrt_model;
    std::vector<double> draws;

    std::size_t reps() const noexcept { return draws.size(); }

    void validate() const {
        if (draws.size() < kMinNullReps) throw ConfigError("null table needs at least 100 draws");
        if (!std::is_sorted(draws.begin(), draws.end())) throw ConfigError("null table draws are not sorted");
        if (statistic == StatId::LRT && !lrt_model) throw ConfigError("LRT null table is missing its model");
    }

    /// Empirical q-quantile (lower order statistic convention).
    double quantile(double q) const {
        if (draws.empty()) throw ConfigError("empty null table");
        const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(draws.size())));
        return draws[std::clamp<std::size_t>(k, 1, draws.size()) - 1];
    }

    friend bool operator==(const NullTable&, const NullTable&) = default;
};

/// One draw of a statistic under H0. Rank statistics see m + n iid uniforms,
/// which have the same rank law as any continuous F; the LRT sees n draws from F.
inline double simulate_null_statistic(StatId statistic, std::size_t m, std::size_t n,
                                      const std::optional<LrtModel>& lrt_model, RngStream& rng) {
    if (statistic == StatId::LRT) {
        if (!lrt_model) throw ConfigError("LRT calibration requires the (F, epsilon, mu) model");
        const std::vector<double> y = gg_sample(n, lrt_model->model, rng);
        return lrt_stat(y, lrt_model->model, lrt_model->alt).value;
    }
    std::vector<double> x(m), y(n);
    for (double& v : x) v = rng.uniform();
    for (double& v : y) v = rng.uniform();
    const PooledOrder order(TwoSample(std::move(x), std::move(y)), TiePolicy::BreakBySample);
    switch (statistic) {
        case StatId::HC: return hc_stat(rank_profile(order)).value;
        case StatId::Wilcoxon: return wilcoxon_u(order).value;
        case StatId::KS: return ks_one_sided(rank_profile(order)).d.value;
        case StatId::TailRun: return tail_run(order).value;
        case StatId::LRT: break;
    }
    throw ConfigError("unknown statistic");
}

/// Replicate k uses the stream (seed, calibration tag, k), so the table does
/// not depend on the number of worker threads.
inline NullTable mc_null_table(StatId statistic, std::size_t m, std::size_t n, std::size_t reps,
                               std::uint64_t seed, std::optional<LrtModel> lrt_model = std::nullopt,
                               unsigned threads = 1) {
    if (reps < kMinNullReps) throw ConfigError("null table needs reps >= 100, got " + std::to_string(reps));
    if (m == 0 || n == 0) throw ConfigError("null table needs m, n >= 1");
    if (statistic == StatId::LRT && !lrt_model) {
        throw ConfigError("LRT calibration requires the (F, epsilon, mu) model");
    }
    if (statistic != StatId::LRT) lrt_model.reset();

    NullTable table{statistic, m, n, seed, lrt_model, std::vector<double>(reps)};
    parallel_for(reps, threads, [&](std::size_t k) {
        RngStream rng = derive_stream(seed, StreamTag::Calibration, k);
        table.draws[k] = simulate_null_statistic(statistic, m, n, table.lrt_model, rng);
    });
    std::sort(table.draws.begin(), table.draws.end());
    return table;
}

/// Add-one Monte Carlo p-value (1 + #{draws >= value}) / (R + 1).
inline PValue mc_pvalue(double value, const NullTable& table) {
    if (table.draws.empty()) throw ConfigError("mc_pvalue: empty null table");
    const auto first_ge = std::lower_bound(table.draws.begin(), table.draws.end(), value);
    const auto at_least = static_cast<double>(table.draws.end() - first_ge);
    return {(1.0 + at_least) / (static_cast<double>(table.reps()) + 1.0), PValueMethod::MonteCarlo};
}

/// Upper-tail normal approximation with continuity correction.
inline PValue wilcoxon_pvalue(double u, std::size_t m, std::size_t n) {
    const double mm = static_cast<double>(m);
    const double nn = static_cast<double>(n);
    if (!(u >= 0.0 && u <= mm * nn)) throw DomainError("wilcoxon_pvalue: u must lie in [0, mn]");
    const double mean = mm * nn / 2.0;
    const double sd = std::sqrt(mm * nn * (mm + nn + 1.0) / 12.0);
    return {detail::clamp_p(detail::normal_upper_tail((u - 0.5 - mean) / sd)), PValueMethod::NormalApprox};
}

inline constexpr std::size_t kMaxExactWilcoxon = 24;

/// Exact null pmf of U over u = 0..mn by the rank-sum counting recursion:
/// the largest pooled value is either an x (adds nothing) or a y (adds m pairs).
inline std::vector<double> wilcoxon_exact_null(std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) throw DomainError("wilcoxon_exact_null: m, n must be positive");
    if (m + n > kMaxExactWilcoxon) throw ScaleError("wilcoxon_exact_null: m + n must not exceed 24");

    // counts[i][j] holds the U-count vector for (i x-values, j y-values).
    std::vector<std::vector<std::vector<std::uint64_t>>> counts(m + 1,
                                                                std::vector<std::vector<std::uint64_t>>(n + 1));
    for (std::size_t i = 0; i <= m; ++i) {
        for (std::size_t j = 0; j <= n; ++j) {
            auto& c = counts[i][j];
            c.assign(i * j + 1, 0);
            if (i == 0 || j == 0) {
                c[0] = 1;
                continue;
            }
            const auto& top_x = counts[i - 1][j];
            const auto& top_y = counts[i][j - 1];
            for (std::size_t u = 0; u < top_x.size(); ++u) c[u] += top_x[u];
            for (std::size_t u = 0; u < top_y.size(); ++u) c[u + i] += top_y[u];
        }
    }
    const auto& final_counts = counts[m][n];
    std::uint64_t total = 0;
    for (auto c : final_counts) total += c;
    std::vector<double> pmf(final_counts.size());
    for (std::size_t u = 0; u < pmf.size(); ++u) {
        pmf[u] = static_cast<double>(final_counts[u]) / static_cast<double>(total);
    }
    return pmf;
}

struct WilcoxonMoments {
    double mean;      // E(U / mn)
    double variance;  // Var(U / mn)
};

/// Alternative moments of U / mn from the three integrals int F dG, int F^2 dG
/// and int (1 - G)^2 dF.
inline WilcoxonMoments wilcoxon_alt_moments(const GGParams& p, const MixtureAlt& alt, std::size_t m,
                                            std::size_t n) {
    const double eps = alt.epsilon();
    const double mu = alt.mu();
    auto g_density = [&](double x) { return (1.0 - eps) * gg_pdf(x, p) + eps * gg_pdf(x - mu, p); };
    const std::vector<double> cuts{0.0, mu};

    const double int_f_dg = quadrature::integrate([&](double x) { return gg_cdf(x, p) * g_density(x); },
                                                  -INFINITY, INFINITY, cuts);
    const double int_f2_dg = quadrature::integrate(
        [&](double x) {
            const double f = gg_cdf(x, p);
            return f * f * g_density(x);
        },
        -INFINITY, INFINITY, cuts);
    const double int_g2_df = quadrature::integrate(
        [&](double x) {
            const double gbar = (1.0 - eps) * gg_survival(x, p) + eps * gg_survival(x - mu, p);
            return gbar * gbar * gg_pdf(x, p);
        },
        -INFINITY, INFINITY, cuts);

    const double lambda = 0.5 - int_f_dg;
    const double eps1 = 1.0 / 3.0 - int_f2_dg;
    const double eps2 = 1.0 / 3.0 - int_g2_df;
    const double mm = static_cast<double>(m);
    const double nn = static_cast<double>(n);
    const double scaled_var = (mm + nn + 1.0) / 12.0 + (mm - 1.0) * (lambda - eps1) + (nn - 1.0) * (lambda - eps2) -
                              lambda * lambda * (mm + nn - 1.0);
    return {int_f_dg, scaled_var / (mm * nn)};
}

/// One-sided Smirnov limit P(lambda_{m,n} >= lambda) -> exp(-2 lambda^2).
inline PValue ks_pvalue(double lambda) {
    if (!std::isfinite(lambda)) throw DomainError("ks_pvalue: lambda must be finite");
    if (lambda <= 0.0) return {1.0, PValueMethod::SmirnovLimit};
    return {detail::clamp_p(std::exp(-2.0 * lambda * lambda)), PValueMethod::SmirnovLimit};
}

namespace detail {

// log P0(L* >= l) = sum_{j<l} log((n - j) / (m + n - j)).
inline double tailrun_log_survival(std::size_t l, std::size_t m, std::size_t n) {
    if (l > n) return -INFINITY;
    double log_p = 0.0;
    for (std::size_t j = 0; j < l; ++j) {
        log_p += std::log(static_cast<double>(n - j)) - std::log(static_cast<double>(m + n - j));
    }
    return log_p;
}

}  // namespace detail

/// Exact P0(L* >= l) under the negative hypergeometric null.
inline PValue tailrun_pvalue(std::size_t l, std::size_t m, std::size_t n) {
    if (l > n) throw DomainError("tailrun_pvalue: l must not exceed n");
    return {detail::clamp_p(std::exp(detail::tailrun_log_survival(l, m, n))), PValueMethod::Exact};
}

/// Randomised exact p-value P0(L* > l) + u P0(L* = l) with u in (0, 1). It is
/// exactly Uniform(0, 1) under H0, so the test attains its nominal level.
inline PValue tailrun_pvalue_randomized(std::size_t l, std::size_t m, std::size_t n, double u) {
    if (l > n) throw DomainError("tailrun_pvalue_randomized: l must not exceed n");
    if (!(u > 0.0 && u < 1.0)) throw DomainError("tailrun_pvalue_randomized: u must lie in (0, 1)");
    const double at_least = std::exp(detail::tailrun_log_survival(l, m, n));
    const double above = std::exp(detail::tailrun_log_survival(l + 1, m, n));
    return {detail::clamp_p(above + u * (at_least - above)), PValueMethod::Exact};
}

/// pmf of L* over l = 0..n.
inline std::vector<double> tailrun_null_pmf(std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) throw DomainError("tailrun_null_pmf: m, n must be positive");
    std::vector<double> pmf(n + 1);
    for (std::size_t l = 0; l <= n; ++l) {
        pmf[l] = std::exp(detail::tailrun_log_survival(l, m, n)) - std::exp(detail::tailrun_log_survival(l + 1, m, n));
    }
    return pmf;
}

// ---------------------------------------------------------------------------
// Null table files
//
// Little-endian binary:
//   "SHMXNULL" magic (8 bytes), u32 format version, u32 statistic id,
//   u64 m, u64 n, u64 reps, u64 seed, u8 has_model,
//   [f64 gamma, f64 scale, f64 epsilon, f64 mu] when has_model,
//   reps x f64 sorted draws.
// ---------------------------------------------------------------------------

inline constexpr char kNullTableMagic[8] = {'S', 'H', 'M', 'X', 'N', 'U', 'L', 'L'};
inline constexpr std::uint32_t kNullTableVersion = 1;

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(bytes, 8);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(bytes, 4);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw ConfigError("null table file is truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char bytes[4];
    if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw ConfigError("null table file is truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

}  // namespace detail

inline void write_null_table(std::ostream& os, const NullTable& table) {
    table.validate();
    os.write(kNullTableMagic, sizeof kNullTableMagic);
    detail::put_u32(os, kNullTableVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(table.statistic));
    detail::put_u64(os, table.m);
    detail::put_u64(os, table.n);
    detail::put_u64(os, table.reps());
    detail::put_u64(os, table.seed);
    os.put(table.lrt_model ? 1 : 0);
    if (table.lrt_model) {
        detail::put_f64(os, table.lrt_model->model.gamma());
        detail::put_f64(os, table.lrt_model->model.scale());
        detail::put_f64(os, table.lrt_model->alt.epsilon());
        detail::put_f64(os, table.lrt_model->alt.mu());
    }
    for (double d : table.draws) detail::put_f64(os, d);
    if (!os) throw ConfigError("failed to write null table");
}

inline NullTable read_null_table(std::istream& is) {
    char magic[8];
    if (!is.read(magic, 8) || !std::equal(magic, magic + 8, kNullTableMagic)) {
        throw ConfigError("not a null table file (bad magic)");
    }
    const std::uint32_t version = detail::get_u32(is);
    if (version != kNullTableVersion) {
        throw ConfigError("unsupported null table format version " + std::to_string(version));
    }
    const std::uint32_t stat = detail::get_u32(is);
    if (stat > static_cast<std::uint32_t>(StatId::LRT)) throw ConfigError("unknown statistic id in null table");

    NullTable table;
    table.statistic = static_cast<StatId>(stat);
    table.m = detail::get_u64(is);
    table.n = detail::get_u64(is);
    const std::uint64_t reps = detail::get_u64(is);
    table.seed = detail::get_u64(is);
    const int has_model = is.get();
    if (has_model == 1) {
        const double gamma = detail::get_f64(is);
        const double scale = detail::get_f64(is);
        const double eps = detail::get_f64(is);
        const double mu = detail::get_f64(is);
        table.lrt_model = LrtModel{GGParams(gamma, scale), MixtureAlt(eps, mu)};
    } else if (has_model != 0) {
        throw ConfigError("null table file is corrupt (model flag)");
    }
    if (reps > (std::uint64_t{1} << 32)) throw ConfigError("null table file claims an implausible size");
    table.draws.resize(reps);
    for (auto& d : table.draws) d = detail::get_f64(is);
    table.validate();
    return table;
}

inline void save_null_table(const std::filesystem::path& path, const NullTable& table) {
    // Written beside the target and renamed into place so readers never see a partial file.
    std::filesystem::path tmp = path;
    tmp += ".partial";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("cannot open " + tmp.string() + " for writing");
        write_null_table(os, table);
    }
    std::filesystem::rename(tmp, path);
}

inline NullTable load_null_table(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open null table " + path.string());
    return read_null_table(is);
}

/// On-disk cache of null tables keyed by (statistic, m, n, reps, seed[, model]).
class NullTableCache {
public:
    explicit NullTableCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::filesystem::path path_for(StatId statistic, std::size_t m, std::size_t n, std::size_t reps,
                                   std::uint64_t seed, const std::optional<LrtModel>& lrt_model) const {
        std::string name = std::string(to_string(statistic)) + "_m" + std::to_string(m) + "_n" + std::to_string(n) +
                           "_r" + std::to_string(reps) + "_s" + std::to_string(seed);
        if (statistic == StatId::LRT && lrt_model) {
            for (double v : {lrt_model->model.gamma(), lrt_model->model.scale(), lrt_model->alt.epsilon(),
                             lrt_model->alt.mu()}) {
                char hex[20];
                std::snprintf(hex, sizeof hex, "_%016llx",
                              static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
                name += hex;
            }
        }
        return dir_ / (name + ".null");
    }

    NullTable get(StatId statistic, std::size_t m, std::size_t n, std::size_t reps, std::uint64_t seed,
                  const std::optional<LrtModel>& lrt_model = std::nullopt, unsigned threads = 1) const {
        const auto path = path_for(statistic, m, n, reps, seed, lrt_model);
        if (std::filesystem::exists(path)) {
            NullTable cached = load_null_table(path);
            if (cached.statistic == statistic && cached.m == m && cached.n == n && cached.reps() == reps &&
                cached.seed == seed && (statistic != StatId::LRT || cached.lrt_model == lrt_model)) {
                return cached;
            }
        }
        NullTable table = mc_null_table(statistic, m, n, reps, seed, lrt_model, threads);
        std::filesystem::create_directories(dir_);
        save_null_table(path, table);
        return table;
    }

private:
    std::filesystem::path dir_;
};

}  // namespace shmix
