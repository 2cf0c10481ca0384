#pragma once

// Staleness decisions per similarity edge, the wrong-recommendation error
// model, and the closed-form service-time optimization.

#include <cmath>
#include <map>
#include <optional>

#include "simdecay/decay.hpp"
#include "simdecay/store.hpp"
#include "simdecay/types.hpp"

namespace simdecay {

struct ServiceParams {
    DurationSec t_fr = 1.0;    // full recompute + transmit time
    DurationSec t_ir = 0.1;    // transmit-old-coefficients time
    double p_b = 0.0;          // base error of the filtering algorithm
    double n_cr = 0.5;         // maximum tolerated wrong-recommendation fraction
    DurationSec tau_visit = 1.0;  // average period between a user's visits
};

inline void validate(const ServiceParams& p) {
    if (!(p.t_ir > 0.0 && p.t_ir < p.t_fr))
        throw input_error("require 0 < t_ir < t_fr");
    if (!(p.p_b >= 0.0 && p.p_b < 1.0))
        throw input_error("require 0 <= p_b < 1");
    if (!(p.n_cr > 0.0 && p.n_cr < 1.0))
        throw input_error("require 0 < n_cr < 1");
    if (!(p.tau_visit > 0.0))
        throw input_error("require tau_visit > 0");
}

struct ScheduleSolution {
    DurationSec t_cr = 0.0;           // longest staleness within the error budget
    DurationSec mean_service_time = 0.0;
    double load_coefficient = 0.0;
};

// An edge is stale once now >= lastRecountTime + recountPeriod, falling back
// to averageRP while the personal period is undetermined (cold-start).
inline bool needs_recompute(const SimilarityEdge& edge, Timestamp now) {
    DurationSec period = edge.recount_period ? *edge.recount_period : edge.average_rp;
    return static_cast<double>(now) >=
           static_cast<double>(edge.last_recount_time) + period;
}

// Total wrong-recommendation probability after staleness t:
// n0(t) = p_b + (1 - p_b) (1 - exp(-lambda t)).
inline double recommendation_error(double lambda, double p_b, double t) {
    require_positive_lambda(lambda);
    if (t < 0.0) throw input_error("time must be non-negative");
    if (!(p_b >= 0.0 && p_b < 1.0)) throw input_error("require 0 <= p_b < 1");
    return p_b + (1.0 - p_b) * (1.0 - std::exp(-lambda * t));
}

// Inverse of recommendation_error at level n_cr:
// t_cr = -(1/lambda) ln(1 - (n_cr - p_b)/(1 - p_b)).
inline double critical_time(double lambda, double p_b, double n_cr) {
    require_positive_lambda(lambda);
    if (!(p_b >= 0.0 && p_b < 1.0)) throw input_error("require 0 <= p_b < 1");
    if (!(n_cr < 1.0)) throw input_error("require n_cr < 1");
    if (!(n_cr > p_b))
        throw infeasible_error("error budget n_cr does not exceed the base error p_b");
    return -std::log(1.0 - (n_cr - p_b) / (1.0 - p_b)) / lambda;
}

// Average service time when recomputation happens every t_cr and the user
// visits every tau: T = (T_fr*tau + t_cr*T_ir) / (t_cr + tau).
inline double mean_service_time(const ServiceParams& params, double t_cr) {
    if (t_cr < 0.0) throw input_error("t_cr must be non-negative");
    return (params.t_fr * params.tau_visit + t_cr * params.t_ir) /
           (t_cr + params.tau_visit);
}

inline double load_coefficient(double mean_service, double t_fr) {
    if (!(t_fr > 0.0)) throw input_error("t_fr must be positive");
    return mean_service / t_fr;
}

// The service time is strictly decreasing in t_cr, so the minimum under the
// error budget is attained at the largest permissible staleness.
inline ScheduleSolution optimize(const ServiceParams& params, double lambda) {
    validate(params);
    ScheduleSolution sol;
    sol.t_cr = critical_time(lambda, params.p_b, params.n_cr);
    sol.mean_service_time = mean_service_time(params, sol.t_cr);
    sol.load_coefficient = load_coefficient(sol.mean_service_time, params.t_fr);
    return sol;
}

// Writes recompute periods into every similarity edge.  averageRP comes from
// the population decay rate; recountPeriod is set only where a per-user rate
// is known (the faster-decaying endpoint wins), and left absent otherwise.
// Horizons are fitted per bucket unit and stored in seconds.
inline void assign_periods(GraphStore& store, double lambda_global,
                           const std::map<UserId, double>& per_user_lambdas,
                           double p_st, Timestamp bucket_len) {
    require_positive_lambda(lambda_global);
    if (!(p_st > 0.0 && p_st < 1.0))
        throw input_error("stability probability must be in (0, 1) for period assignment");
    if (bucket_len <= 0) throw input_error("bucket length must be positive");
    double scale = static_cast<double>(bucket_len);
    double average_rp = stable_horizon(lambda_global, p_st) * scale;
    for (auto& [pair, edge] : store.similarities()) {
        edge.average_rp = average_rp;
        std::optional<double> lambda_pair;
        for (UserId u : {pair.a, pair.b}) {
            auto it = per_user_lambdas.find(u);
            if (it != per_user_lambdas.end() && it->second > 0.0)
                lambda_pair = lambda_pair ? std::max(*lambda_pair, it->second) : it->second;
        }
        if (lambda_pair)
            edge.recount_period = stable_horizon(*lambda_pair, p_st) * scale;
        else
            edge.recount_period.reset();
    }
}

}  // namespace simdecay
