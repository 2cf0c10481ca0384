#pragma once

// Exponential decay-law fitting via closed-form least squares on the
// log-transformed counts, a Pareto alternative for model comparison, and
// the derived lifetime/probability quantities.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "simdecay/types.hpp"

namespace simdecay {

// N(t) = n0 * exp(-lambda * t).
struct DecayModel {
    double n0 = 0.0;
    double lambda = 0.0;
    double residual_std = 0.0;      // RMS residual in the original count scale
    double log_residual_std = 0.0;  // RMS residual of the log-linear regression
    std::size_t points_used = 0;
    std::size_t points_excluded = 0;  // zero/negative counts dropped before the log
};

// N(t) = c * t^(-alpha).
struct ParetoModel {
    double c = 0.0;
    double alpha = 0.0;
    double residual_std = 0.0;
    double log_residual_std = 0.0;
    std::size_t points_used = 0;
    std::size_t points_excluded = 0;
};

using FitPoint = std::pair<double, double>;  // (t, N)

namespace detail {

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double log_rms = 0.0;
};

// Ordinary least squares of y against x.  Solving the normal equations of
// the squared-error mean gives slope = (mean(xy) - mean(x)mean(y)) /
// (mean(x^2) - mean(x)^2) and intercept = mean(y) - slope*mean(x).
inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0, mxx = 0.0, mxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
        mxx += x[i] * x[i];
        mxy += x[i] * y[i];
    }
    mx /= n;
    my /= n;
    mxx /= n;
    mxy /= n;
    LinearFit fit;
    fit.slope = (mxy - mx * my) / (mxx - mx * mx);
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
    }
    fit.log_rms = std::sqrt(ss / n);
    return fit;
}

inline bool has_two_distinct(const std::vector<double>& x) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] != x[0]) return true;
    return false;
}

}  // namespace detail

// Fits ln N = ln n0 - lambda*t by closed-form least squares.  Points with
// N <= 0 are excluded before the log transform and reported.
inline DecayModel fit_exponential(const std::vector<FitPoint>& points) {
    std::vector<double> t, n, logn;
    std::size_t excluded = 0;
    for (const auto& [ti, ni] : points) {
        if (ni <= 0.0) {
            ++excluded;
            continue;
        }
        t.push_back(ti);
        n.push_back(ni);
        logn.push_back(std::log(ni));
    }
    if (t.size() < 2 || !detail::has_two_distinct(t))
        throw insufficient_data_error("exponential fit needs at least 2 distinct t values with N > 0");
    auto fit = detail::least_squares(t, logn);
    DecayModel model;
    model.lambda = -fit.slope;
    model.n0 = std::exp(fit.intercept);
    model.log_residual_std = fit.log_rms;
    model.points_used = t.size();
    model.points_excluded = excluded;
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = n[i] - model.n0 * std::exp(-model.lambda * t[i]);
        ss += r * r;
    }
    model.residual_std = std::sqrt(ss / static_cast<double>(t.size()));
    return model;
}

// Fits ln N = ln c - alpha*ln t.  The residual_std is computed in the
// original count scale so it is comparable with the exponential fit.
inline ParetoModel fit_pareto(const std::vector<FitPoint>& points) {
    std::vector<double> t, n, logt, logn;
    std::size_t excluded = 0;
    for (const auto& [ti, ni] : points) {
        if (ni <= 0.0 || ti <= 0.0) {
            ++excluded;
            continue;
        }
        t.push_back(ti);
        n.push_back(ni);
        logt.push_back(std::log(ti));
        logn.push_back(std::log(ni));
    }
    if (logt.size() < 2 || !detail::has_two_distinct(logt))
        throw insufficient_data_error("pareto fit needs at least 2 distinct t values with t, N > 0");
    auto fit = detail::least_squares(logt, logn);
    ParetoModel model;
    model.alpha = -fit.slope;
    model.c = std::exp(fit.intercept);
    model.log_residual_std = fit.log_rms;
    model.points_used = logt.size();
    model.points_excluded = excluded;
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double r = n[i] - model.c * std::pow(t[i], -model.alpha);
        ss += r * r;
    }
    model.residual_std = std::sqrt(ss / static_cast<double>(t.size()));
    return model;
}

inline void require_positive_lambda(double lambda) {
    if (!(lambda > 0.0)) throw input_error("decay rate lambda must be positive");
}

// Average lifetime tau = 1/lambda.
inline double mean_lifetime(double lambda) {
    require_positive_lambda(lambda);
    return 1.0 / lambda;
}
inline double mean_lifetime(const DecayModel& m) { return mean_lifetime(m.lambda); }

// Half-life = tau * ln 2.
inline double half_life(double lambda) { return mean_lifetime(lambda) * std::log(2.0); }
inline double half_life(const DecayModel& m) { return half_life(m.lambda); }

// Probability that a preference has changed by time t: p(t) = 1 - exp(-lambda t).
inline double p_change(double lambda, double t) {
    require_positive_lambda(lambda);
    if (t < 0.0) throw input_error("time must be non-negative");
    return 1.0 - std::exp(-lambda * t);
}
inline double p_change(const DecayModel& m, double t) { return p_change(m.lambda, t); }

// Probability that a preference is still unchanged at time t: q(t) = exp(-lambda t).
inline double q_stable(double lambda, double t) {
    require_positive_lambda(lambda);
    if (t < 0.0) throw input_error("time must be non-negative");
    return std::exp(-lambda * t);
}
inline double q_stable(const DecayModel& m, double t) { return q_stable(m.lambda, t); }

// Longest horizon over which preferences stay unchanged with probability p_st.
inline double stable_horizon(double lambda, double p_st) {
    require_positive_lambda(lambda);
    if (!(p_st > 0.0 && p_st <= 1.0))
        throw input_error("stability probability must be in (0, 1]");
    return -std::log(p_st) / lambda;
}
inline double stable_horizon(const DecayModel& m, double p_st) {
    return stable_horizon(m.lambda, p_st);
}

// Time at which preferences have changed with probability q_st.
inline double change_horizon(double lambda, double q_st) {
    require_positive_lambda(lambda);
    if (!(q_st >= 0.0 && q_st < 1.0))
        throw input_error("change probability must be in [0, 1)");
    return -std::log(1.0 - q_st) / lambda;
}
inline double change_horizon(const DecayModel& m, double q_st) {
    return change_horizon(m.lambda, q_st);
}

}  // namespace simdecay
