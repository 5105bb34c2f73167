#pragma once

// Closed-form detection boundaries for the generalized Gaussian mixture and
// finite-n evaluators of the asymptotic power and impossibility conditions.
// The evaluators report numbers; the asymptotic statements themselves compare
// growth rates, so the verdict is only a coarse reading at the given n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "shmix/distributions.hpp"
#include "shmix/error.hpp"
#include "shmix/quadrature.hpp"

namespace shmix {

struct BoundaryQuery {
    double beta;
    double gamma;

    BoundaryQuery(double beta_, double gamma_) : beta(beta_), gamma(gamma_) {
        if (!(beta_ > 0.0 && beta_ < 1.0)) throw ParameterError("boundary beta must lie in (0, 1)");
        if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) throw ParameterError("boundary gamma must be positive");
    }
};

enum class Verdict { Yes, No, Inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Yes: return "yes";
        case Verdict::No: return "no";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

inline constexpr double kVerdictYesRatio = 10.0;
inline constexpr double kVerdictNoRatio = 0.1;

struct ConditionReport {
    double lhs;
    double scale;
    double ratio;
    Verdict verdict;
};

inline ConditionReport make_report(double lhs, double scale) {
    if (!std::isfinite(lhs)) throw NumericError("condition left-hand side is not finite");
    const double ratio = lhs / scale;
    const Verdict v = ratio >= kVerdictYesRatio ? Verdict::Yes
                      : ratio <= kVerdictNoRatio ? Verdict::No
                                                 : Verdict::Inconclusive;
    return {lhs, scale, ratio, v};
}

/// rho*_gamma(beta). The formula is the sparse-regime boundary (1/2 < beta < 1)
/// but is evaluated for any beta in (0, 1).
inline double detection_boundary_sparse(const BoundaryQuery& q) {
    const double beta = q.beta;
    const double g = q.gamma;
    if (g <= 1.0) return 2.0 * beta - 1.0;
    const double breakpoint = 1.0 - std::pow(2.0, -g / (g - 1.0));
    if (beta < breakpoint) return std::pow(std::pow(2.0, 1.0 / (g - 1.0)) - 1.0, g - 1.0) * (beta - 0.5);
    return std::pow(1.0 - std::pow(1.0 - beta, 1.0 / g), g);
}

/// Critical dense shift exponent s: the hypotheses merge for s below it.
inline double detection_boundary_dense(double beta, double gamma) {
    if (!(beta > 0.0 && beta < 0.5)) throw ParameterError("dense boundary beta must lie in (0, 1/2)");
    if (!(gamma > 0.0)) throw ParameterError("dense boundary gamma must be positive");
    if (gamma >= 0.5) return beta;
    return 0.5 - (1.0 - 2.0 * beta) / (1.0 + 2.0 * gamma);
}

/// r_gamma = (1 - 2^(-1/(gamma-1)))^gamma for gamma > 1; the HC analysis picks
/// the threshold t_n = (gamma q log n)^(1/gamma) with q = r / r_gamma when r < r_gamma.
inline double hc_r_gamma(double gamma) {
    if (!(gamma > 1.0)) throw ParameterError("r_gamma is defined for gamma > 1");
    return std::pow(1.0 - std::pow(2.0, -1.0 / (gamma - 1.0)), gamma);
}

/// t_n = (gamma q log n)^(1/gamma).
inline double tail_threshold(double q, double n, double gamma) { return std::pow(gamma * q * std::log(n), 1.0 / gamma); }

/// Threshold exponent q used by the sparse HC analysis: r / r_gamma when
/// r < r_gamma, 1 when r >= r_gamma, and r (so t_n = mu_n) when gamma <= 1.
inline double hc_threshold_q(double r, double gamma) {
    if (!(r > 0.0)) throw ParameterError("hc_threshold_q: r must be positive");
    if (gamma <= 1.0) return r;
    const double r_gamma = hc_r_gamma(gamma);
    return r < r_gamma ? r / r_gamma : 1.0;
}

struct HcConditions {
    ConditionReport tail_count;       // n (Fbar(t) v eps Fbar(t - mu)) against log^2 n
    ConditionReport standardized_gap;  // sqrt(n) eps (Fbar(t-mu) - Fbar(t)) / sqrt(Fbar(t) + eps eta Fbar(t-mu)) against log n
    ConditionReport median_gap;       // sqrt(n) eps (Fbar(-mu) - 1/2) against log n, at the median t = 0
};

inline HcConditions hc_conditions(double t, double n, const GGParams& p, const MixtureAlt& alt, double eta) {
    if (!(n > 1.0)) throw ParameterError("hc_conditions: n must exceed 1");
    if (!(eta > 0.0 && eta <= 0.5)) throw ParameterError("hc_conditions: eta must lie in (0, 1/2]");
    const double eps = alt.epsilon();
    const double log_n = std::log(n);
    const double fbar_t = gg_survival(t, p);
    const double fbar_shift = gg_survival(t - alt.mu(), p);

    const double count = n * std::max(fbar_t, eps * fbar_shift);
    const double gap = std::sqrt(n) * eps * (fbar_shift - fbar_t) / std::sqrt(fbar_t + eps * eta * fbar_shift);
    const double median = std::sqrt(n) * eps * (gg_survival(-alt.mu(), p) - 0.5);
    return {make_report(count, log_n * log_n), make_report(gap, log_n), make_report(median, log_n)};
}

/// int F(x - mu) dF(x).
inline double shifted_cdf_overlap(const GGParams& p, double mu) {
    return quadrature::integrate([&](double x) { return gg_cdf(x - mu, p) * gg_pdf(x, p); }, -INFINITY, INFINITY,
                                 {0.0, mu});
}

/// sqrt(n) eps [1/2 - int F(. - mu) dF] against log n.
inline ConditionReport wilcoxon_condition(double n, const GGParams& p, const MixtureAlt& alt) {
    if (!(n > 1.0)) throw ParameterError("wilcoxon_condition: n must exceed 1");
    const double bracket = 0.5 - shifted_cdf_overlap(p, alt.mu());
    return make_report(std::sqrt(n) * alt.epsilon() * bracket, std::log(n));
}

struct KsCondition {
    ConditionReport report;  // sqrt(n) eps sup_t [Fbar(t - mu) - Fbar(t)], scale 1
    double sup;              // sup_t [Fbar(t - mu) - Fbar(t)]
    double argmax;
};

inline constexpr std::size_t kKsGridPoints = 401;

/// sup over t of Fbar(t - mu) - Fbar(t), by a bracketing grid then Brent refinement.
/// The objective is unimodal for the symmetric unimodal generalized Gaussian.
inline std::pair<double, double> shift_gap_sup(const GGParams& p, double mu) {
    auto gap = [&](double t) { return gg_survival(t - mu, p) - gg_survival(t, p); };
    const double reach = std::max(gg_quantile(1.0 - 1e-6, p), mu);
    const double lo = -reach;
    const double hi = mu + reach;

    std::size_t best = 0;
    double best_value = -INFINITY;
    std::vector<double> grid(kKsGridPoints);
    for (std::size_t i = 0; i < kKsGridPoints; ++i) {
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kKsGridPoints - 1);
        const double v = gap(grid[i]);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    if (best == 0 || best + 1 == kKsGridPoints) {
        throw NumericError("shift gap maximiser sits at the grid edge; widen the bracket");
    }
    const auto [argmax, neg] = boost::math::tools::brent_find_minima([&](double t) { return -gap(t); },
                                                                     grid[best - 1], grid[best + 1],
                                                                     std::numeric_limits<double>::digits / 2);
    return {-neg, argmax};
}

inline KsCondition ks_condition(double n, const GGParams& p, const MixtureAlt& alt) {
    if (!(n > 1.0)) throw ParameterError("ks_condition: n must exceed 1");
    const auto [sup, argmax] = shift_gap_sup(p, alt.mu());
    return {make_report(std::sqrt(n) * alt.epsilon() * sup, 1.0), sup, argmax};
}

struct TailRunCondition {
    double x_tail_mass;     // m Fbar(t), should vanish
    double y_excess;        // n eps Fbar(t - mu) - 2 l, should be nonnegative
    Verdict verdict;
};

inline TailRunCondition tailrun_condition(double t, double m, double n, const GGParams& p, const MixtureAlt& alt,
                                          double l) {
    const double mass = m * gg_survival(t, p);
    const double excess = n * alt.epsilon() * gg_survival(t - alt.mu(), p) - 2.0 * l;
    Verdict v = Verdict::Inconclusive;
    if (excess < 0.0 || mass >= kVerdictYesRatio) {
        v = Verdict::No;
    } else if (mass <= kVerdictNoRatio) {
        v = Verdict::Yes;
    }
    return {mass, excess, v};
}

/// [int_{-inf}^{x_upper} f(x - mu)^2 / f(x) dx - 1]_+ , integrand evaluated in log space.
inline double lower_bound_integral(double x_upper, const GGParams& p, double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ParameterError("lower_bound_integral: mu must be >= 0");
    if (std::isnan(x_upper)) throw DomainError("lower_bound_integral: x_upper is NaN");
    auto integrand = [&](double x) {
        const double log_value = 2.0 * gg_log_pdf(x - mu, p) - gg_log_pdf(x, p);
        return log_value < -690.0 ? 0.0 : std::exp(log_value);
    };
    // The Gaussian integrand peaks at 2 mu; 0 and mu carry the kinks for gamma <= 1.
    const double integral = quadrature::integrate(integrand, -INFINITY, x_upper, {0.0, mu, 2.0 * mu});
    return std::max(0.0, integral - 1.0);
}

}  // namespace shmix
