// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and time
// limits are fixed here and are not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "shmix/shmix.hpp"
#include "shmix_cli.hpp"

using namespace shmix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// grid value -> test -> power, read back from a power CSV.
std::map<double, std::map<std::string, double>> read_power_csv(const fs::path& path) {
    std::map<double, std::map<std::string, double>> table;
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string grid, test, power;
        std::getline(row, grid, ',');
        std::getline(row, test, ',');
        std::getline(row, power, ',');
        table[std::stod(grid)][test] = std::stod(power);
    }
    return table;
}

int run_tool(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

Outcome hc_identity() {
    std::mt19937_64 gen(20240101);
    std::uniform_int_distribution<int> size(2, 200);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto [x, y] = oracle::random_samples(gen, size(gen), size(gen), trial % 4 == 0 ? 0.7 : 0.0);
        const TwoSample ts(x, y);
        worst = std::max(worst, std::abs(hc_stat(ts).value - hc_stat_sup_form(ts).value));
    }
    return {worst <= 1e-9, fmt("max |rank form - sup form| = %.3g over 1000 instances (limit 1e-9)", worst)};
}

Outcome wilcoxon_exact() {
    double worst_mean = 0.0, worst_var = 0.0;
    bool enumeration_matches = true;
    for (std::size_t m = 1; m <= 8; ++m) {
        for (std::size_t n = 1; n <= 8; ++n) {
            const auto pmf = wilcoxon_exact_null(m, n);
            std::vector<double> counts(m * n + 1, 0.0);
            double total = 0.0;
            oracle::for_each_arrangement(static_cast<int>(m), static_cast<int>(n), [&](const std::vector<int>& labels) {
                std::size_t xs_below = 0, u = 0;
                for (int lab : labels) {
                    if (lab == 0) ++xs_below;
                    else u += xs_below;
                }
                counts[u] += 1.0;
                total += 1.0;
            });
            long double mean = 0.0L, second = 0.0L;
            for (std::size_t u = 0; u < pmf.size(); ++u) {
                if (std::abs(pmf[u] * total - counts[u]) > 1e-9) enumeration_matches = false;
                mean += static_cast<long double>(u) * pmf[u];
                second += static_cast<long double>(u * u) * pmf[u];
            }
            const double mn = static_cast<double>(m * n);
            const double var = static_cast<double>(second - mean * mean);
            worst_mean = std::max(worst_mean, std::abs(static_cast<double>(mean) - mn / 2.0));
            worst_var = std::max(worst_var, std::abs(var - mn * (m + n + 1.0) / 12.0));
        }
    }
    return {enumeration_matches && worst_mean <= 1e-12 && worst_var <= 1e-12,
            fmt("pmf %s enumeration; max mean error %.3g, max variance error %.3g (limit 1e-12)",
                enumeration_matches ? "matches" : "DIFFERS FROM", worst_mean, worst_var)};
}

Outcome tailrun_exact() {
    bool exact = true;
    double worst_mean = 0.0;
    for (std::size_t m = 1; m <= 7; ++m) {
        for (std::size_t n = 1; n <= 7; ++n) {
            const auto pmf = tailrun_null_pmf(m, n);
            std::vector<long long> counts(n + 1, 0);
            long long total = 0;
            oracle::for_each_arrangement(static_cast<int>(m), static_cast<int>(n), [&](const std::vector<int>& labels) {
                std::size_t run = 0;
                for (auto it = labels.rbegin(); it != labels.rend() && *it == 1; ++it) ++run;
                ++counts[run];
                ++total;
            });
            double mean = 0.0;
            for (std::size_t l = 0; l <= n; ++l) {
                const double scaled = pmf[l] * static_cast<double>(total);
                if (std::llround(scaled) != counts[l] || std::abs(scaled - counts[l]) > 1e-9) exact = false;
                mean += static_cast<double>(l) * pmf[l];
            }
            worst_mean = std::max(worst_mean, std::abs(mean - static_cast<double>(n) / (m + 1.0)));
        }
    }
    return {exact && worst_mean <= 1e-12,
            fmt("pmf x C(m+n, n) %s the arrangement counts; max |mean - n/(m+1)| = %.3g (limit 1e-12)",
                exact ? "equals" : "DIFFERS FROM", worst_mean)};
}

Outcome null_size() {
    ScenarioConfig c;
    c.name = "null-size";
    c.model = GGParams(2.0);
    c.m = c.n = 2000;
    c.regime = Regime::Sparse;
    c.beta = 0.6;
    c.grid = {0.3};
    c.level = 0.05;
    c.power_reps = 2000;
    c.calib_reps = 4000;
    c.master_seed = 4;
    const NullLevelReport report = run_null_level(c);
    bool ok = true;
    std::string detail;
    for (const auto& s : report.sizes) {
        ok = ok && std::abs(s.power - 0.05) <= 0.015;
        detail += fmt("%s %.4f  ", std::string(to_string(s.test)).c_str(), s.power);
    }
    return {ok, detail + "(each within 0.05 +/- 0.015)"};
}

Outcome lower_bound() {
    double worst = 0.0;
    for (double mu : {0.5, 1.0, 2.0}) {
        const double expected = std::exp(mu * mu) - 1.0;
        worst = std::max(worst, std::abs(lower_bound_integral(INFINITY, GGParams(2.0), mu) / expected - 1.0));
    }
    return {worst <= 1e-6, fmt("max relative error vs e^{mu^2} - 1 = %.3g (limit 1e-6)", worst)};
}

Outcome boundaries() {
    double worst_break = 0.0;
    for (double g : {1.5, 2.0, 3.0}) {
        const double b = 1.0 - std::pow(2.0, -g / (g - 1.0));
        const double left = std::pow(std::pow(2.0, 1.0 / (g - 1.0)) - 1.0, g - 1.0) * (b - 0.5);
        worst_break = std::max(worst_break, std::abs(detection_boundary_sparse({b, g}) - left));
        worst_break = std::max(worst_break, std::abs(detection_boundary_sparse({std::nextafter(b, 0.0), g}) -
                                                     detection_boundary_sparse({b, g})));
    }
    bool linear = true;
    for (int i = 1; i < 1000; ++i) {
        const double beta = i / 1000.0;
        if (detection_boundary_sparse({beta, 1.0}) != 2.0 * beta - 1.0) linear = false;
    }
    double worst_dense = 0.0;
    for (double beta : {0.05, 0.1, 0.2, 0.3, 0.45}) {
        worst_dense = std::max(worst_dense, std::abs(detection_boundary_dense(beta, 0.5) -
                                                     detection_boundary_dense(beta, std::nextafter(0.5, 0.0))));
        worst_dense = std::max(worst_dense, std::abs(detection_boundary_dense(beta, 0.5) - beta));
    }
    return {worst_break <= 1e-12 && linear && worst_dense <= 1e-12,
            fmt("breakpoint gap %.3g, rho*_1 = 2 beta - 1 %s, dense gap at gamma 1/2 %.3g (limits 1e-12)",
                worst_break, linear ? "exactly" : "NOT exactly", worst_dense)};
}

Outcome figure_dense(const fs::path& scratch) {
    const fs::path dir = scratch / "dense_threads1";
    fs::create_directories(dir);
    if (run_tool({"power", "--preset", "normal-dense", "--scale", "0.1", "--threads", "1", "--out", dir.string()}) != 0) {
        return {false, "power command failed"};
    }
    const auto table = read_power_csv(dir / "normal-dense.csv");
    bool ok = table.size() == 10;
    double worst_gap = 0.0;
    for (const auto& [s, powers] : table) {
        if (s < 0.4 - 1e-9) continue;
        for (const char* t : {"HC", "WILCOXON", "KS"}) {
            worst_gap = std::max(worst_gap, std::abs(powers.at(t) - powers.at("LRT")));
        }
    }
    ok = ok && worst_gap <= 0.15;
    const auto& top = table.rbegin()->second;
    const double deficit = top.at("WILCOXON") - top.at("TAILRUN");
    ok = ok && deficit >= 0.2;
    return {ok, fmt("max |power - LRT| for s >= 0.4: %.3f (limit 0.15); Wilcoxon - tail-run at s = 0.5: %.3f "
                    "(needs >= 0.2)",
                    worst_gap, deficit)};
}

Outcome figure_verysparse() {
    const PowerCurve curve = reproduce_figure(Figure::NormalVerySparse, 0.1);
    const std::size_t last = curve.points.size() - 1;
    const double wilcoxon = power_at(curve, last, StatId::Wilcoxon).power;
    const double ks = power_at(curve, last, StatId::KS).power;
    const double tail = power_at(curve, last, StatId::TailRun).power;
    const double hc = power_at(curve, last, StatId::HC).power;
    const bool ok = std::abs(curve.points[last].grid_value - 0.9) < 1e-9 && wilcoxon <= 0.15 && ks <= 0.15 &&
                    tail >= hc - 0.05;
    return {ok, fmt("at r = 0.9: Wilcoxon %.3f, KS %.3f (limit 0.15); tail-run %.3f vs HC %.3f (needs >= HC - 0.05)",
                    wilcoxon, ks, tail, hc)};
}

Outcome determinism(const fs::path& scratch) {
    const fs::path first = scratch / "dense_threads1" / "normal-dense.csv";
    if (!fs::exists(first)) figure_dense(scratch);
    const fs::path dir = scratch / "dense_threads4";
    fs::create_directories(dir);
    if (run_tool({"power", "--preset", "normal-dense", "--scale", "0.1", "--threads", "4", "--out", dir.string()}) != 0) {
        return {false, "power command failed"};
    }
    const std::string a = slurp(first), b = slurp(dir / "normal-dense.csv");
    return {!a.empty() && a == b, fmt("--threads 1 and --threads 4 CSVs are %s (%zu bytes)",
                                      a == b ? "byte-identical" : "DIFFERENT", a.size())};
}

Outcome sampler_fidelity() {
    bool ok = true;
    std::string detail;
    for (double g : {0.5, 1.0, 2.0}) {
        const GGParams p(g);
        RngStream rng(777, {static_cast<std::uint64_t>(g * 2)});
        const auto draws = gg_sample(100000, p, rng);
        double energy = 0.0;
        for (double x : draws) energy += std::pow(std::abs(x), g);
        energy /= static_cast<double>(draws.size());
        const double pvalue = oracle::one_sample_ks_pvalue(draws, [&](double x) { return gg_cdf(x, p); });
        ok = ok && pvalue > 0.001 && std::abs(energy - 1.0) <= 0.02;
        detail += fmt("gamma %.1f: KS p %.3f, mean |X|^gamma %.4f; ", g, pvalue, energy);
    }
    return {ok, detail + "(p > 0.001, mean within 1 +/- 0.02)"};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit;
    std::function<Outcome(const fs::path&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::string scratch = (fs::temp_directory_path() / "shmix_acceptance").string();
    std::vector<int> only;
    app.add_option("--scratch", scratch, "directory for generated files");
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const fs::path root(scratch);
    fs::remove_all(root);
    fs::create_directories(root);

    const std::vector<Criterion> criteria{
        {1, "HC rank form equals sup form", 10.0, [](const fs::path&) { return hc_identity(); }},
        {2, "Wilcoxon exact null moments", 5.0, [](const fs::path&) { return wilcoxon_exact(); }},
        {3, "tail-run exact null", 5.0, [](const fs::path&) { return tailrun_exact(); }},
        {4, "null size of all five tests", 300.0, [](const fs::path&) { return null_size(); }},
        {5, "lower-bound integral closed form", 1.0, [](const fs::path&) { return lower_bound(); }},
        {6, "boundary formulas", 1.0, [](const fs::path&) { return boundaries(); }},
        {7, "dense normal figure at m = n = 10^4", 900.0, figure_dense},
        {8, "very sparse normal figure at m = n = 10^4", 900.0, [](const fs::path&) { return figure_verysparse(); }},
        {9, "thread-count determinism", 900.0, determinism},
        {10, "sampler fidelity", 30.0, [](const fs::path&) { return sampler_fidelity(); }},
    };

    const std::set<int> selected(only.begin(), only.end());
    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = Clock::now();
        Outcome outcome{false, ""};
        try {
            outcome = c.run(root);
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = seconds_since(start);
        const bool in_time = elapsed < c.time_limit;
        const bool pass = outcome.pass && in_time;
        if (!pass) ++failures;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << outcome.detail
                  << fmt(" [%.1f s, limit %.0f s%s]", elapsed, c.time_limit, in_time ? "" : ", TOO SLOW") << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures)) << std::endl;
    return failures == 0 ? 0 : 1;
}
