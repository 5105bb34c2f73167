#pragma once

// Command-line front end. run_cli() takes the argument list and the output
// streams explicitly so the commands can be exercised in-process.

#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "shmix/calibration.hpp"
#include "shmix/distributions.hpp"
#include "shmix/experiments.hpp"
#include "shmix/json_io.hpp"
#include "shmix/statistics.hpp"
#include "shmix/theory.hpp"

namespace shmix::cli {

/// One finite value per line; blank lines and lines starting with '#' are skipped.
inline std::vector<double> read_sample_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read sample file " + path.string());
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(first, last - first + 1);
        double v = 0.0;
        const char* begin = token.data();
        const char* end = begin + token.size();
        if (*begin == '+') ++begin;
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected one finite number, got '" +
                              token + "'");
        }
        values.push_back(v);
    }
    if (values.empty()) throw ConfigError("sample file " + path.string() + " contains no values");
    return values;
}

struct ModelArgs {
    double gamma = 2.0;
    double scale = 1.0;
    std::optional<double> epsilon;
    std::optional<double> mu;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--gamma", gamma, "generalized Gaussian shape")->capture_default_str();
        cmd.add_option("--scale", scale, "generalized Gaussian scale")->capture_default_str();
        cmd.add_option("--epsilon", epsilon, "mixture fraction");
        cmd.add_option("--mu", mu, "mixture shift");
    }

    GGParams params() const { return GGParams(gamma, scale); }

    std::optional<LrtModel> lrt_model() const {
        if (!epsilon || !mu) return std::nullopt;
        return LrtModel{params(), MixtureAlt(*epsilon, *mu)};
    }
};

inline std::vector<StatId> parse_tests(const std::vector<std::string>& names) {
    std::vector<StatId> out;
    for (const auto& name : names) {
        auto id = parse_stat_id(name);
        if (!id) throw ConfigError("unknown test '" + name + "'");
        out.push_back(*id);
    }
    return out;
}

inline json pvalue_json(StatId id, double value, const PValue& p) {
    return json{{"test", std::string(to_string(id))},
                {"statistic", value},
                {"p_value", p.p},
                {"method", std::string(to_string(p.method))}};
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Two-sample sparse mixture detection: tests, calibration, boundaries, power experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    unsigned threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "worker threads, 0 = auto (results do not depend on it)")
        ->capture_default_str();

    // test ------------------------------------------------------------------
    auto* test_cmd = app.add_subcommand("test", "run detection tests on two sample files");
    std::string x_file, y_file, table_file;
    std::vector<std::string> test_names{"hc", "wilcoxon", "ks", "tailrun"};
    std::size_t test_reps = 4000;
    bool dejitter = false;
    ModelArgs test_model;
    test_cmd->add_option("--x", x_file, "control sample file")->required();
    test_cmd->add_option("--y", y_file, "test sample file")->required();
    test_cmd->add_option("--tests", test_names, "tests to run")->delimiter(',')->capture_default_str();
    test_cmd->add_option("--reps", test_reps, "Monte Carlo replicates for HC/LRT calibration")->capture_default_str();
    test_cmd->add_option("--seed", seed, "calibration seed")->capture_default_str();
    test_cmd->add_option("--table", table_file, "precomputed HC null table");
    test_cmd->add_flag("--dejitter", dejitter, "break exact ties with deterministic ulp offsets");
    test_model.add_to(*test_cmd);

    // power -----------------------------------------------------------------
    auto* power_cmd = app.add_subcommand("power", "empirical power curve for a scenario");
    std::string config_file, preset, out_dir = ".", cache_dir;
    double scale = 1.0;
    std::optional<std::size_t> power_reps;
    std::optional<double> level;
    std::optional<std::uint64_t> power_seed;
    bool force_null = false;
    power_cmd->add_option("--config", config_file, "scenario JSON file");
    power_cmd->add_option("--preset", preset, "preset figure: normal-dense, normal-moderate, normal-verysparse, "
                                              "dexp-dense, dexp-moderate");
    power_cmd->add_option("--scale", scale, "shrink m = n = 10^5 by this factor (presets)")->capture_default_str();
    power_cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    power_cmd->add_option("--reps", power_reps, "power replicates per grid point");
    power_cmd->add_option("--level", level, "test level");
    power_cmd->add_option("--seed", power_seed, "master seed");
    power_cmd->add_option("--cache", cache_dir, "null table cache directory");
    power_cmd->add_flag("--force-null", force_null, "simulate y from F at every grid point");

    // boundary --------------------------------------------------------------
    auto* boundary_cmd = app.add_subcommand("boundary", "detection boundary value");
    double b_beta = 0.0, b_gamma = 2.0;
    std::string b_regime = "sparse";
    boundary_cmd->add_option("--beta", b_beta, "sparsity exponent")->required();
    boundary_cmd->add_option("--gamma", b_gamma, "generalized Gaussian shape")->capture_default_str();
    boundary_cmd->add_option("--regime", b_regime, "sparse or dense")->capture_default_str();

    // diagnose --------------------------------------------------------------
    auto* diag_cmd = app.add_subcommand("diagnose", "evaluate a power or impossibility condition at finite n");
    std::string condition;
    ModelArgs diag_model;
    double d_n = 0.0;
    std::optional<double> d_m, d_t, d_eta, d_beta, d_r, d_s;
    double d_l = 1.0;
    std::string d_x_upper = "inf";
    diag_cmd->add_option("--condition", condition, "hc, wilcoxon, ks, tailrun or lower-bound")->required();
    diag_cmd->add_option("--n", d_n, "y sample size")->required();
    diag_cmd->add_option("--m", d_m, "x sample size (default n)");
    diag_cmd->add_option("--t", d_t, "threshold t (default: the sparse analysis threshold with --r, else 0)");
    diag_cmd->add_option("--eta", d_eta, "limit of n/(m+n) (default from m, n)");
    diag_cmd->add_option("--beta", d_beta, "derive epsilon = n^-beta");
    diag_cmd->add_option("--r", d_r, "derive mu by the sparse calibration");
    diag_cmd->add_option("--s", d_s, "derive mu by the dense calibration");
    diag_cmd->add_option("--l", d_l, "tail-run target length")->capture_default_str();
    diag_cmd->add_option("--x-upper", d_x_upper, "upper integration limit (number or inf)")->capture_default_str();
    diag_model.add_to(*diag_cmd);

    // calibrate -------------------------------------------------------------
    auto* calib_cmd = app.add_subcommand("calibrate", "build a Monte Carlo null table file");
    std::string c_stat, c_out;
    std::size_t c_m = 0, c_n = 0, c_reps = 4000;
    bool c_force = false;
    ModelArgs calib_model;
    calib_cmd->add_option("--statistic", c_stat, "HC, WILCOXON, KS or LRT")->required();
    calib_cmd->add_option("--m", c_m, "x sample size")->required();
    calib_cmd->add_option("--n", c_n, "y sample size")->required();
    calib_cmd->add_option("--reps", c_reps, "replicates")->capture_default_str();
    calib_cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    calib_cmd->add_option("--out", c_out, "output file")->required();
    calib_cmd->add_flag("--force", c_force, "overwrite an existing file");
    calib_model.add_to(*calib_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*test_cmd) {
            TwoSample ts(read_sample_file(x_file), read_sample_file(y_file));
            if (dejitter) ts = shmix::dejitter(ts);
            const auto tests = parse_tests(test_names);
            const PooledOrder order(ts);
            const RankProfile profile = rank_profile(order);
            json results = json::array();
            for (StatId id : tests) {
                switch (id) {
                    case StatId::HC: {
                        const double v = hc_stat(profile).value;
                        NullTable table = table_file.empty()
                                              ? mc_null_table(StatId::HC, ts.m(), ts.n(), test_reps, seed, std::nullopt,
                                                              threads)
                                              : load_null_table(table_file);
                        if (table.statistic != StatId::HC || table.m != ts.m() || table.n != ts.n()) {
                            throw ConfigError("null table does not match HC with m = " + std::to_string(ts.m()) +
                                              ", n = " + std::to_string(ts.n()));
                        }
                        results.push_back(pvalue_json(id, v, mc_pvalue(v, table)));
                        break;
                    }
                    case StatId::Wilcoxon: {
                        const double u = wilcoxon_u(order).value;
                        results.push_back(pvalue_json(id, u, wilcoxon_pvalue(u, ts.m(), ts.n())));
                        break;
                    }
                    case StatId::KS: {
                        const KsStat ks = ks_one_sided(profile);
                        json r = pvalue_json(id, ks.d.value, ks_pvalue(ks.lambda));
                        r["lambda"] = ks.lambda;
                        results.push_back(r);
                        break;
                    }
                    case StatId::TailRun: {
                        const double l = tail_run(order).value;
                        results.push_back(
                            pvalue_json(id, l, tailrun_pvalue(static_cast<std::size_t>(l), ts.m(), ts.n())));
                        break;
                    }
                    case StatId::LRT: {
                        const auto model = test_model.lrt_model();
                        if (!model) throw ConfigError("the LRT needs --epsilon and --mu (and --gamma, --scale)");
                        const double v = lrt_stat(ts.y(), model->model, model->alt).value;
                        const NullTable table =
                            mc_null_table(StatId::LRT, ts.m(), ts.n(), test_reps, seed, model, threads);
                        results.push_back(pvalue_json(id, v, mc_pvalue(v, table)));
                        break;
                    }
                }
            }
            out << json{{"m", ts.m()}, {"n", ts.n()}, {"results", results}}.dump(2) << "\n";
            return 0;
        }

        if (*power_cmd) {
            ScenarioConfig config;
            if (!config_file.empty() && !preset.empty()) throw ConfigError("give either --config or --preset, not both");
            if (!config_file.empty()) {
                std::ifstream in(config_file);
                if (!in) throw ConfigError("cannot read config file " + config_file);
                json j;
                try {
                    j = json::parse(in);
                } catch (const json::parse_error& e) {
                    throw ConfigError("config file " + config_file + " is not valid JSON: " + e.what());
                }
                config = scenario_from_json(j);
            } else if (!preset.empty()) {
                const auto fig = parse_figure(preset);
                if (!fig) throw ConfigError("unknown preset '" + preset + "'");
                config = figure_config(*fig, scale);
            } else {
                throw ConfigError("power needs --config or --preset");
            }
            if (power_reps) config.power_reps = *power_reps;
            if (level) config.level = *level;
            if (power_seed) config.master_seed = *power_seed;
            if (force_null) config.force_null = true;
            config.validate();

            RunOptions opts;
            opts.threads = threads;
            if (!cache_dir.empty()) opts.cache_dir = cache_dir;
            const PowerCurve curve = run_power_grid(config, opts);

            std::filesystem::create_directories(out_dir);
            const auto csv_path = std::filesystem::path(out_dir) / (config.name + ".csv");
            const auto json_path = std::filesystem::path(out_dir) / (config.name + ".json");
            {
                std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
                write_power_csv(csv, curve);
                if (!csv) throw ConfigError("failed writing " + csv_path.string());
            }
            {
                std::ofstream side(json_path, std::ios::binary | std::ios::trunc);
                side << to_json(curve).dump(2) << "\n";
                if (!side) throw ConfigError("failed writing " + json_path.string());
            }
            out << "wrote " << csv_path.string() << " (" << curve.points.size() << " grid points x "
                << config.tests.size() << " tests), boundary marker " << curve.boundary_marker << "\n";
            return 0;
        }

        if (*boundary_cmd) {
            double value = 0.0;
            if (b_regime == "sparse") {
                value = detection_boundary_sparse(BoundaryQuery(b_beta, b_gamma));
            } else if (b_regime == "dense") {
                value = detection_boundary_dense(b_beta, b_gamma);
            } else {
                throw ConfigError("regime must be 'sparse' or 'dense'");
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.12g", value);
            out << buf << "\n";
            return 0;
        }

        if (*diag_cmd) {
            const GGParams p = diag_model.params();
            const double m = d_m.value_or(d_n);
            auto alternative = [&]() -> MixtureAlt {
                double eps = 0.0, mu = 0.0;
                if (diag_model.epsilon) {
                    eps = *diag_model.epsilon;
                } else if (d_beta) {
                    eps = std::pow(d_n, -*d_beta);
                } else {
                    throw ConfigError("give --epsilon or --beta");
                }
                if (diag_model.mu) {
                    mu = *diag_model.mu;
                } else if (d_r) {
                    mu = std::pow(p.gamma() * *d_r * std::log(d_n), 1.0 / p.gamma());
                } else if (d_s) {
                    mu = std::pow(d_n, *d_s - 0.5);
                } else {
                    throw ConfigError("give --mu, --r or --s");
                }
                return MixtureAlt(eps, mu);
            };

            json report;
            if (condition == "hc") {
                const MixtureAlt alt = alternative();
                const double eta = d_eta.value_or(d_n / (m + d_n));
                // Without --t: the sparse analysis threshold when r is known, else the median.
                double t = 0.0;
                if (d_t) {
                    t = *d_t;
                } else if (d_r) {
                    t = tail_threshold(hc_threshold_q(*d_r, p.gamma()), d_n, p.gamma());
                }
                const HcConditions c = hc_conditions(t, d_n, p, alt, eta);
                report = json{{"condition", "hc"},
                              {"t", t},
                              {"tail_count", to_json(c.tail_count)},
                              {"standardized_gap", to_json(c.standardized_gap)},
                              {"median_gap", to_json(c.median_gap)}};
            } else if (condition == "wilcoxon") {
                report = to_json(wilcoxon_condition(d_n, p, alternative()));
                report["condition"] = "wilcoxon";
            } else if (condition == "ks") {
                const KsCondition c = ks_condition(d_n, p, alternative());
                report = to_json(c.report);
                report["condition"] = "ks";
                report["sup"] = c.sup;
                report["argmax"] = c.argmax;
            } else if (condition == "tailrun") {
                if (!d_t) throw ConfigError("tailrun condition needs --t");
                const TailRunCondition c = tailrun_condition(*d_t, m, d_n, p, alternative(), d_l);
                report = json{{"condition", "tailrun"},
                              {"x_tail_mass", c.x_tail_mass},
                              {"y_excess", c.y_excess},
                              {"verdict", std::string(to_string(c.verdict))}};
            } else if (condition == "lower-bound") {
                double x_upper = INFINITY;
                if (d_x_upper != "inf" && d_x_upper != "+inf") {
                    try {
                        x_upper = std::stod(d_x_upper);
                    } catch (const std::exception&) {
                        throw ConfigError("--x-upper must be a number or 'inf'");
                    }
                }
                double mu = 0.0;
                if (diag_model.mu) {
                    mu = *diag_model.mu;
                } else {
                    mu = alternative().mu();
                }
                const double value = lower_bound_integral(x_upper, p, mu);
                report = json{{"condition", "lower-bound"}, {"x_upper", d_x_upper}, {"mu", mu}, {"value", value}};
                std::optional<double> eps = diag_model.epsilon;
                if (!eps && d_beta) eps = std::pow(d_n, -*d_beta);
                if (eps) report["n_eps2_value"] = d_n * *eps * *eps * value;
            } else {
                throw ConfigError("unknown condition '" + condition +
                                  "' (expected hc, wilcoxon, ks, tailrun or lower-bound)");
            }
            out << report.dump(2) << "\n";
            return 0;
        }

        if (*calib_cmd) {
            const auto id = parse_stat_id(c_stat);
            if (!id) throw ConfigError("unknown statistic '" + c_stat + "'");
            if (*id == StatId::TailRun) {
                throw ConfigError("exact null available for TAILRUN; `shmix test --tests tailrun` reports the exact "
                                  "p-value without a table");
            }
            if (std::filesystem::exists(c_out) && !c_force) {
                throw ConfigError(c_out + " exists; pass --force to overwrite");
            }
            std::optional<LrtModel> model;
            if (*id == StatId::LRT) {
                model = calib_model.lrt_model();
                if (!model) throw ConfigError("LRT calibration needs --epsilon and --mu");
            }
            const NullTable table = mc_null_table(*id, c_m, c_n, c_reps, seed, model, threads);
            save_null_table(c_out, table);
            out << json{{"statistic", std::string(to_string(*id))},
                        {"m", c_m},
                        {"n", c_n},
                        {"reps", c_reps},
                        {"seed", seed},
                        {"q90", table.quantile(0.90)},
                        {"q95", table.quantile(0.95)},
                        {"q99", table.quantile(0.99)}}
                       .dump(2)
                << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace shmix::cli
