#pragma once

// Monte Carlo power harness: calibrate nulls, simulate the mixture alternative
// over a grid of signal exponents, and tabulate empirical power.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "shmix/calibration.hpp"
#include "shmix/distributions.hpp"
#include "shmix/error.hpp"
#include "shmix/parallel.hpp"
#include "shmix/rng.hpp"
#include "shmix/statistics.hpp"
#include "shmix/theory.hpp"

namespace shmix {

enum class Regime { Sparse, Dense };

inline std::string_view to_string(Regime r) { return r == Regime::Sparse ? "sparse" : "dense"; }

inline std::optional<Regime> parse_regime(std::string_view text) {
    if (text == "sparse") return Regime::Sparse;
    if (text == "dense") return Regime::Dense;
    return std::nullopt;
}

struct ScenarioConfig {
    std::string name = "scenario";
    GGParams model;
    std::size_t m = 0;
    std::size_t n = 0;
    Regime regime = Regime::Sparse;
    double beta = 0.6;
    std::vector<double> grid;  // r values (sparse) or s values (dense)
    std::vector<StatId> tests{std::begin(kAllStats), std::end(kAllStats)};
    double level = 0.05;
    std::size_t power_reps = 200;
    std::size_t calib_reps = 4000;
    std::uint64_t master_seed = 0;
    bool force_null = false;         // simulate y from F at every grid point
    bool randomized_tailrun = true;  // randomised exact p-value for L*
    std::string assumptions;

    void validate() const {
        auto fail = [](const std::string& field, const std::string& why) {
            throw ConfigError("field '" + field + "': " + why);
        };
        if (m == 0) fail("m", "must be positive");
        if (n == 0) fail("n", "must be positive");
        if (n > m) fail("n", "must not exceed m (the theory assumes n <= m)");
        if (!(n >= 2)) fail("n", "must be at least 2");
        if (!(level > 0.0 && level < 1.0)) fail("level", "must lie in (0, 1)");
        if (power_reps == 0) fail("power_reps", "must be positive");
        if (calib_reps < kMinNullReps) fail("calib_reps", "must be at least 100");
        if (tests.empty()) fail("tests", "must name at least one test");
        if (grid.empty()) fail("grid", "must contain at least one value");
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (!(grid[i] > grid[i - 1])) fail("grid", "must be strictly increasing");
        }
        if (regime == Regime::Sparse) {
            if (!(beta > 0.0 && beta < 1.0)) fail("beta", "sparse regime needs beta in (0, 1)");
            for (double r : grid) {
                if (!(r > 0.0 && r < 1.0)) fail("grid", "sparse r values must lie in (0, 1)");
            }
        } else {
            if (!(beta > 0.0 && beta < 0.5)) fail("beta", "dense regime needs beta in (0, 1/2)");
            for (double s : grid) {
                if (!(s > 0.0 && s <= 0.5)) fail("grid", "dense s values must lie in (0, 1/2]");
            }
        }
        if (!(std::pow(static_cast<double>(n), -beta) < 0.5)) fail("beta", "n^-beta must be below 1/2");
    }

    /// (epsilon_n, mu_n) at grid index g.
    MixtureAlt alternative(std::size_t g) const {
        const double nn = static_cast<double>(n);
        if (regime == Regime::Sparse) return sparse_calibration(nn, SparseParam(beta, grid.at(g)), model.gamma());
        return dense_calibration(nn, DenseParam(beta, grid.at(g)));
    }

    double boundary_marker() const {
        if (regime == Regime::Sparse) return detection_boundary_sparse(BoundaryQuery(beta, model.gamma()));
        return detection_boundary_dense(beta, model.gamma());
    }

    bool uses(StatId id) const { return std::find(tests.begin(), tests.end(), id) != tests.end(); }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct RunOptions {
    unsigned threads = 1;  // 0 = hardware concurrency; never changes results
    std::optional<std::filesystem::path> cache_dir;
};

struct TestPower {
    StatId test;
    double power;
    double ci_half_width;
    std::size_t reject_count;
    std::size_t reps;
};

struct PowerPoint {
    double grid_value;
    double epsilon;
    double mu;
    std::vector<TestPower> results;  // ordered as config.tests
};

struct PowerCurve {
    ScenarioConfig config;
    std::vector<PowerPoint> points;
    double boundary_marker;
};

/// 1.96 sqrt(p (1 - p) / reps), the normal-approximation 95% half-width.
inline double binomial_ci_half_width(double power, std::size_t reps) {
    return 1.96 * std::sqrt(power * (1.0 - power) / static_cast<double>(reps));
}

namespace detail {

inline NullTable obtain_table(StatId id, const ScenarioConfig& c, const std::optional<LrtModel>& model,
                              const RunOptions& opts) {
    if (opts.cache_dir) {
        return NullTableCache(*opts.cache_dir).get(id, c.m, c.n, c.calib_reps, c.master_seed, model, opts.threads);
    }
    return mc_null_table(id, c.m, c.n, c.calib_reps, c.master_seed, model, opts.threads);
}

// Rejection counts of every configured test over `reps` replicates. Replicate k
// draws from the stream (seed, tag, point, k) and results are summed in index
// order, so the counts do not depend on the thread count.
inline std::vector<std::size_t> count_rejections(const ScenarioConfig& c, const MixtureAlt& alt, bool null_data,
                                                 StreamTag tag, std::uint64_t point, std::size_t reps,
                                                 const std::optional<NullTable>& hc_table,
                                                 const std::optional<NullTable>& lrt_table, const RunOptions& opts) {
    const std::size_t tests = c.tests.size();
    std::vector<std::uint8_t> rejected(reps * tests, 0);

    parallel_for(reps, opts.threads, [&](std::size_t k) {
        RngStream rng = derive_stream(c.master_seed, tag, point, k);
        std::vector<double> x = gg_sample(c.m, c.model, rng);
        std::vector<double> y = null_data ? gg_sample(c.n, c.model, rng) : mixture_sample(c.n, c.model, alt, rng);
        const double randomizer = rng.uniform();

        std::optional<double> lrt;
        if (lrt_table) lrt = lrt_stat(y, c.model, alt).value;
        const PooledOrder order(TwoSample(std::move(x), std::move(y)), TiePolicy::BreakBySample);
        const RankStatistics stats = rank_statistics(order);

        for (std::size_t t = 0; t < tests; ++t) {
            double p = 1.0;
            switch (c.tests[t]) {
                case StatId::HC: p = mc_pvalue(stats.hc, *hc_table).p; break;
                case StatId::LRT: p = mc_pvalue(*lrt, *lrt_table).p; break;
                case StatId::Wilcoxon: p = wilcoxon_pvalue(stats.wilcoxon, c.m, c.n).p; break;
                case StatId::KS: p = ks_pvalue(stats.ks_lambda).p; break;
                case StatId::TailRun: {
                    const auto l = static_cast<std::size_t>(stats.tail_run);
                    p = c.randomized_tailrun ? tailrun_pvalue_randomized(l, c.m, c.n, randomizer).p
                                             : tailrun_pvalue(l, c.m, c.n).p;
                    break;
                }
            }
            rejected[k * tests + t] = p < c.level ? 1 : 0;
        }
    });

    std::vector<std::size_t> counts(tests, 0);
    for (std::size_t k = 0; k < reps; ++k) {
        for (std::size_t t = 0; t < tests; ++t) counts[t] += rejected[k * tests + t];
    }
    return counts;
}

inline std::vector<TestPower> summarize(const ScenarioConfig& c, const std::vector<std::size_t>& counts,
                                        std::size_t reps) {
    std::vector<TestPower> out;
    for (std::size_t t = 0; t < c.tests.size(); ++t) {
        const double power = static_cast<double>(counts[t]) / static_cast<double>(reps);
        out.push_back({c.tests[t], power, binomial_ci_half_width(power, reps), counts[t], reps});
    }
    return out;
}

}  // namespace detail

/// Empirical power of every configured test at every grid value.
/// The HC table depends only on (m, n) and is shared; the LRT table is rebuilt
/// for each (n, epsilon, mu).
inline PowerCurve run_power_grid(const ScenarioConfig& config, const RunOptions& opts = {}) {
    config.validate();
    PowerCurve curve{config, {}, config.boundary_marker()};

    std::optional<NullTable> hc_table;
    if (config.uses(StatId::HC)) hc_table = detail::obtain_table(StatId::HC, config, std::nullopt, opts);

    for (std::size_t g = 0; g < config.grid.size(); ++g) {
        const MixtureAlt alt = config.alternative(g);
        std::optional<NullTable> lrt_table;
        if (config.uses(StatId::LRT)) {
            lrt_table = detail::obtain_table(StatId::LRT, config, LrtModel{config.model, alt}, opts);
        }
        const auto counts = detail::count_rejections(config, alt, config.force_null, StreamTag::Power, g,
                                                     config.power_reps, hc_table, lrt_table, opts);
        curve.points.push_back({config.grid[g], alt.epsilon(), alt.mu(), detail::summarize(config, counts, config.power_reps)});
    }
    return curve;
}

struct NullLevelReport {
    ScenarioConfig config;
    double epsilon;  // the LRT statistic is evaluated under the first grid point's alternative
    double mu;
    std::vector<TestPower> sizes;
};

/// Empirical size of every configured test with both samples drawn from F,
/// using power_reps replicates.
inline NullLevelReport run_null_level(const ScenarioConfig& config, const RunOptions& opts = {}) {
    config.validate();
    const MixtureAlt alt = config.alternative(0);
    std::optional<NullTable> hc_table;
    std::optional<NullTable> lrt_table;
    if (config.uses(StatId::HC)) hc_table = detail::obtain_table(StatId::HC, config, std::nullopt, opts);
    if (config.uses(StatId::LRT)) lrt_table = detail::obtain_table(StatId::LRT, config, LrtModel{config.model, alt}, opts);
    const auto counts = detail::count_rejections(config, alt, true, StreamTag::NullLevel, 0, config.power_reps,
                                                 hc_table, lrt_table, opts);
    return {config, alt.epsilon(), alt.mu(), detail::summarize(config, counts, config.power_reps)};
}

enum class Figure { NormalDense, NormalModerate, NormalVerySparse, DexpDense, DexpModerate };

inline constexpr std::pair<Figure, std::string_view> kFigureNames[] = {
    {Figure::NormalDense, "normal-dense"},
    {Figure::NormalModerate, "normal-moderate"},
    {Figure::NormalVerySparse, "normal-verysparse"},
    {Figure::DexpDense, "dexp-dense"},
    {Figure::DexpModerate, "dexp-moderate"},
};

inline std::optional<Figure> parse_figure(std::string_view text) {
    for (const auto& [fig, name] : kFigureNames) {
        if (name == text) return fig;
    }
    return std::nullopt;
}

inline std::string_view to_string(Figure fig) {
    for (const auto& [f, name] : kFigureNames) {
        if (f == fig) return name;
    }
    return "?";
}

inline constexpr std::size_t kPresetSampleSize = 100000;

/// Scenario for one preset power figure. scale shrinks m = n from 10^5;
/// beta and the grid stay fixed and (epsilon_n, mu_n) are recomputed at the
/// smaller n.
inline ScenarioConfig figure_config(Figure fig, double scale = 1.0) {
    if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("field 'scale': must lie in (0, 1]");
    ScenarioConfig c;
    c.name = std::string(to_string(fig));
    c.m = c.n = static_cast<std::size_t>(std::llround(static_cast<double>(kPresetSampleSize) * scale));
    c.level = 0.05;
    c.power_reps = 200;
    c.calib_reps = 4000;

    const bool dexp = fig == Figure::DexpDense || fig == Figure::DexpModerate;
    // Unit-variance Laplace: the standard gamma = 1 form has variance 2.
    c.model = dexp ? GGParams(1.0, 1.0 / std::sqrt(2.0)) : GGParams(2.0, 1.0);

    auto steps = [](int count, double step) {
        std::vector<double> g;
        for (int k = 1; k <= count; ++k) g.push_back(k * step);
        return g;
    };
    switch (fig) {
        case Figure::NormalDense:
        case Figure::DexpDense:
            c.regime = Regime::Dense;
            c.beta = 0.2;
            c.grid = steps(10, 0.05);
            break;
        case Figure::NormalModerate:
        case Figure::DexpModerate:
            c.regime = Regime::Sparse;
            c.beta = 0.6;
            c.grid = steps(10, 0.05);
            break;
        case Figure::NormalVerySparse:
            c.regime = Regime::Sparse;
            c.beta = 0.8;
            c.grid = steps(9, 0.1);
            break;
    }
    if (dexp) {
        c.assumptions =
            "double-exponential grid reused from the normal model for the same regime; "
            "scale 1/sqrt(2) gives unit variance; mu_n is added on the data axis";
    }
    return c;
}

inline PowerCurve reproduce_figure(Figure fig, double scale, const RunOptions& opts = {}) {
    return run_power_grid(figure_config(fig, scale), opts);
}

// CSV with header grid_value,test,power,ci_half_width,reject_count,reps.
inline void write_power_csv(std::ostream& os, const PowerCurve& curve) {
    os << "grid_value,test,power,ci_half_width,reject_count,reps\n";
    char buf[160];
    for (const auto& point : curve.points) {
        for (const auto& r : point.results) {
            std::snprintf(buf, sizeof buf, "%.10g,%s,%.6f,%.6f,%zu,%zu\n", point.grid_value,
                          std::string(to_string(r.test)).c_str(), r.power, r.ci_half_width, r.reject_count, r.reps);
            os << buf;
        }
    }
}

/// Power of one test at one grid index.
inline const TestPower& power_at(const PowerCurve& curve, std::size_t g, StatId test) {
    for (const auto& r : curve.points.at(g).results) {
        if (r.test == test) return r;
    }
    throw ConfigError("test " + std::string(to_string(test)) + " was not run");
}

}  // namespace shmix
