#pragma once

// Generalized Gaussian (exponential power) family and the two-component shift
// mixture used as the alternative hypothesis.
//
// Standard form density: f(x) = c * exp(-|x|^g / g), c = g^(1 - 1/g) / (2 Gamma(1/g)).
// g = 2 is the standard normal, g = 1 the Laplace law with variance 2.
// A scale s maps this to f(x / s) / s.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "shmix/error.hpp"
#include "shmix/rng.hpp"

namespace shmix {

class GGParams {
public:
    GGParams() : GGParams(2.0, 1.0) {}

    explicit GGParams(double gamma, double scale = 1.0) : gamma_(gamma), scale_(scale) {
        if (!(gamma > 0.0) || !std::isfinite(gamma)) {
            throw ParameterError("generalized Gaussian shape must be positive and finite, got " +
                                 std::to_string(gamma));
        }
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw ParameterError("generalized Gaussian scale must be positive and finite, got " +
                                 std::to_string(scale));
        }
        log_norm_ = (1.0 - 1.0 / gamma) * std::log(gamma) - std::log(2.0) - std::lgamma(1.0 / gamma) -
                    std::log(scale);
    }

    double gamma() const noexcept { return gamma_; }
    double scale() const noexcept { return scale_; }

    /// log of the density's normalising constant, scale included.
    double log_normalizer() const noexcept { return log_norm_; }

    /// |x / scale|^gamma / gamma, the negated log-kernel.
    double energy(double x) const noexcept { return std::pow(std::abs(x) / scale_, gamma_) / gamma_; }

    /// Variance of the law, scale included.
    double variance() const noexcept {
        return scale_ * scale_ * std::pow(gamma_, 2.0 / gamma_) * std::tgamma(3.0 / gamma_) /
               std::tgamma(1.0 / gamma_);
    }

    friend bool operator==(const GGParams&, const GGParams&) = default;

private:
    double gamma_;
    double scale_;
    double log_norm_ = 0.0;
};

/// G = (1 - epsilon) F + epsilon F(. - mu).
class MixtureAlt {
public:
    MixtureAlt(double epsilon, double mu) : epsilon_(epsilon), mu_(mu) {
        if (!(epsilon > 0.0 && epsilon < 0.5)) {
            throw ParameterError("mixture fraction epsilon must lie in (0, 1/2), got " + std::to_string(epsilon));
        }
        if (!(mu > 0.0) || !std::isfinite(mu)) {
            throw ParameterError("mixture shift mu must be positive and finite, got " + std::to_string(mu));
        }
    }

    double epsilon() const noexcept { return epsilon_; }
    double mu() const noexcept { return mu_; }

    friend bool operator==(const MixtureAlt&, const MixtureAlt&) = default;

private:
    double epsilon_;
    double mu_;
};

/// epsilon_n = n^-beta, mu_n = (gamma r log n)^(1/gamma).
class SparseParam {
public:
    SparseParam(double beta, double r) : beta_(beta), r_(r) {
        if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("sparse beta must lie in (0, 1)");
        if (!(r > 0.0 && r < 1.0)) throw ParameterError("sparse r must lie in (0, 1)");
    }
    double beta() const noexcept { return beta_; }
    double r() const noexcept { return r_; }

private:
    double beta_;
    double r_;
};

/// epsilon_n = n^-beta, mu_n = n^(s - 1/2). s = 1/2 is admitted because the
/// preset dense grid ends there (mu = 1).
class DenseParam {
public:
    DenseParam(double beta, double s) : beta_(beta), s_(s) {
        if (!(beta > 0.0 && beta < 0.5)) throw ParameterError("dense beta must lie in (0, 1/2)");
        if (!(s > 0.0 && s <= 0.5)) throw ParameterError("dense s must lie in (0, 1/2]");
    }
    double beta() const noexcept { return beta_; }
    double s() const noexcept { return s_; }

private:
    double beta_;
    double s_;
};

inline double gg_pdf(double x, const GGParams& p) {
    if (!std::isfinite(x)) throw DomainError("gg_pdf: argument must be finite");
    return std::exp(p.log_normalizer() - p.energy(x));
}

/// log f(x), finite for every finite x.
inline double gg_log_pdf(double x, const GGParams& p) noexcept { return p.log_normalizer() - p.energy(x); }

inline double gg_survival(double x, const GGParams& p) {
    if (std::isnan(x)) throw DomainError("gg_survival: argument is NaN");
    if (x == INFINITY) return 0.0;
    if (x == -INFINITY) return 1.0;
    const double a = 1.0 / p.gamma();
    if (x >= 0.0) return 0.5 * boost::math::gamma_q(a, p.energy(x));
    return 0.5 + 0.5 * boost::math::gamma_p(a, p.energy(x));
}

inline double gg_cdf(double x, const GGParams& p) {
    if (std::isnan(x)) throw DomainError("gg_cdf: argument is NaN");
    // F(x) = Fbar(-x) by symmetry; both tails keep full relative precision.
    return gg_survival(-x, p);
}

inline double gg_quantile(double q, const GGParams& p) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("gg_quantile: probability must lie in (0, 1)");
    if (q == 0.5) return 0.0;
    const double a = 1.0 / p.gamma();
    // Invert the tail that is smaller so tiny tail probabilities stay accurate.
    const double tail = q > 0.5 ? 1.0 - q : q;
    const double energy = boost::math::gamma_q_inv(a, 2.0 * tail);
    const double magnitude = p.scale() * std::pow(p.gamma() * energy, a);
    return q > 0.5 ? magnitude : -magnitude;
}

namespace detail {

// |X|^g / g ~ Gamma(1/g, 1) with an independent uniform sign.
template <class Dist>
inline double draw_gg(Dist& w, const GGParams& p, RngStream& rng) {
    const double magnitude = p.scale() * std::pow(p.gamma() * w(rng.engine()), 1.0 / p.gamma());
    return rng.coin() ? magnitude : -magnitude;
}

}  // namespace detail

inline void gg_sample_into(std::span<double> out, const GGParams& p, RngStream& rng) {
    std::gamma_distribution<double> w(1.0 / p.gamma(), 1.0);
    for (double& v : out) v = detail::draw_gg(w, p, rng);
}

inline std::vector<double> gg_sample(std::size_t count, const GGParams& p, RngStream& rng) {
    std::vector<double> out(count);
    gg_sample_into(out, p, rng);
    return out;
}

/// Each draw is contaminated independently with probability epsilon.
inline void mixture_sample_into(std::span<double> out, const GGParams& p, const MixtureAlt& alt, RngStream& rng) {
    std::gamma_distribution<double> w(1.0 / p.gamma(), 1.0);
    for (double& v : out) {
        const bool shifted = rng.uniform() < alt.epsilon();
        v = detail::draw_gg(w, p, rng) + (shifted ? alt.mu() : 0.0);
    }
}

inline std::vector<double> mixture_sample(std::size_t count, const GGParams& p, const MixtureAlt& alt,
                                          RngStream& rng) {
    std::vector<double> out(count);
    mixture_sample_into(out, p, alt, rng);
    return out;
}

/// CDF of the mixture G.
inline double mixture_cdf(double x, const GGParams& p, const MixtureAlt& alt) {
    return (1.0 - alt.epsilon()) * gg_cdf(x, p) + alt.epsilon() * gg_cdf(x - alt.mu(), p);
}

/// n is real-valued so that closed-form checks such as n = e are expressible.
inline MixtureAlt sparse_calibration(double n, const SparseParam& sp, double gamma) {
    if (!(n >= 2.0)) throw ParameterError("sparse_calibration: n must be at least 2");
    if (!(gamma > 0.0)) throw ParameterError("sparse_calibration: gamma must be positive");
    const double epsilon = std::pow(n, -sp.beta());
    if (epsilon >= 0.5) {
        throw ParameterError("sparse_calibration: n^-beta = " + std::to_string(epsilon) + " is not below 1/2");
    }
    const double mu = std::pow(gamma * sp.r() * std::log(n), 1.0 / gamma);
    return MixtureAlt(epsilon, mu);
}

inline MixtureAlt dense_calibration(double n, const DenseParam& dp) {
    if (!(n >= 2.0)) throw ParameterError("dense_calibration: n must be at least 2");
    return MixtureAlt(std::pow(n, -dp.beta()), std::pow(n, dp.s() - 0.5));
}

}  // namespace shmix
