#pragma once

// Corpus-level stability analysis: pair selection, parallel series scans,
// histogram/survival aggregation, per-user and per-group decay rates, and
// the CSV artifacts (Table 1, histogram, smoothed histogram, survival).

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "simdecay/decay.hpp"
#include "simdecay/engine.hpp"
#include "simdecay/format.hpp"
#include "simdecay/parallel.hpp"
#include "simdecay/similarity.hpp"
#include "simdecay/stability.hpp"
#include "simdecay/store.hpp"
#include "simdecay/types.hpp"

namespace simdecay {

struct AnalysisOptions {
    Timestamp bucket_len = 1'000'000;    // seconds per bucket
    double sensitivity_d = 0.01;         // Eq. 3 change threshold
    std::size_t min_active_buckets = 5;  // joint-activity span required per pair
    std::size_t smoothing_window = 3;    // moving-average window (odd)
    SimilarityOptions similarity;
};

struct StabilityAnalysis {
    TimeGrid grid;
    std::vector<UserPair> selected_pairs;  // ascending pair order
    IntervalHistogram hist;                // raw interval-length counts
    std::vector<std::pair<std::size_t, double>> smoothed;
    SurvivalCurve survival;  // monitored decays = completed intervals
    std::map<UserId, std::vector<std::size_t>> intervals_by_user;  // credited to both users
};

// Pairs worth monitoring: enough co-rated items to ever be computable and a
// joint-activity overlap spanning at least min_active_buckets buckets.
inline std::vector<UserPair> select_pairs(const GraphStore& store, const TimeGrid& grid,
                                          const AnalysisOptions& opts = {}) {
    std::vector<UserPair> selected;
    if (grid.bucket_count == 0) return selected;
    for (const auto& [pair, count] : co_rating_counts(store)) {
        if (count < opts.similarity.min_overlap) continue;
        const auto& la = store.user_ratings(pair.a);
        const auto& lb = store.user_ratings(pair.b);
        std::size_t first = std::max(grid.bucket_of(la.front().timestamp),
                                     grid.bucket_of(lb.front().timestamp));
        std::size_t last = std::min(grid.bucket_of(la.back().timestamp),
                                    grid.bucket_of(lb.back().timestamp));
        if (last < first || last - first + 1 < opts.min_active_buckets) continue;
        selected.push_back(pair);
    }
    return selected;
}

// Full stability scan of the log: series per selected pair (parallel),
// aggregation into the histogram, smoothed curve and survival curve
// (single-threaded, deterministic order).
inline StabilityAnalysis analyze_stability(const GraphStore& store,
                                           const AnalysisOptions& opts = {}) {
    StabilityAnalysis out;
    out.grid = make_grid(store, opts.bucket_len);
    out.selected_pairs = select_pairs(store, out.grid, opts);

    std::vector<std::vector<std::size_t>> per_pair(out.selected_pairs.size());
    detail::parallel_chunks(out.selected_pairs.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto series = build_series(store, out.selected_pairs[i], out.grid, opts.similarity);
            per_pair[i] = stability_intervals(series, opts.sensitivity_d);
        }
    });

    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < out.selected_pairs.size(); ++i) {
        const UserPair& pair = out.selected_pairs[i];
        for (std::size_t len : per_pair[i]) {
            all.push_back(len);
            out.intervals_by_user[pair.a].push_back(len);
            out.intervals_by_user[pair.b].push_back(len);
        }
    }
    out.hist = histogram(all, opts.sensitivity_d);
    out.smoothed = moving_average(out.hist, opts.smoothing_window);
    out.survival = survival_curve(out.hist, out.hist.total_intervals);
    return out;
}

// ---------------------------------------------------------------------------
// Fit-point extraction

// Dense (n, N(n)) points over the histogram's support, zeros included; the
// fitting routines exclude non-positive counts themselves.
inline std::vector<FitPoint> histogram_points(const IntervalHistogram& hist) {
    std::vector<FitPoint> pts;
    if (hist.counts.empty()) return pts;
    std::size_t lo = hist.counts.begin()->first;
    std::size_t hi = hist.counts.rbegin()->first;
    for (std::size_t n = lo; n <= hi; ++n) {
        auto it = hist.counts.find(n);
        double c = it == hist.counts.end() ? 0.0 : static_cast<double>(it->second);
        pts.emplace_back(static_cast<double>(n), c);
    }
    return pts;
}

inline std::vector<FitPoint> smoothed_points(
    const std::vector<std::pair<std::size_t, double>>& smoothed) {
    std::vector<FitPoint> pts;
    pts.reserve(smoothed.size());
    for (const auto& [n, v] : smoothed) pts.emplace_back(static_cast<double>(n), v);
    return pts;
}

inline std::vector<FitPoint> survival_points(const SurvivalCurve& curve) {
    std::vector<FitPoint> pts;
    pts.reserve(curve.values.size());
    for (std::size_t t = 0; t < curve.values.size(); ++t)
        pts.emplace_back(static_cast<double>(t), static_cast<double>(curve.values[t]));
    return pts;
}

// ---------------------------------------------------------------------------
// Per-user and per-group decay rates

struct RateOptions {
    std::size_t min_intervals = 5;  // completed intervals required for a personal rate
    std::size_t group_count = 3;    // activity-quantile groups
    double sensitivity_d = 0.01;
};

struct GroupFit {
    std::vector<UserId> members;  // ascending activity rank, ascending id within ties
    std::size_t interval_count = 0;
    std::optional<DecayModel> model;
};

struct RateAssignment {
    std::map<UserId, double> personal;        // users fitted from their own intervals
    std::vector<GroupFit> groups;             // ascending activity
    std::map<UserId, double> lambda_by_user;  // personal rate, else the group's
};

namespace detail {

inline std::optional<DecayModel> try_interval_fit(const std::vector<std::size_t>& lengths,
                                                  double d) {
    if (lengths.empty()) return std::nullopt;
    auto pts = histogram_points(histogram(lengths, d));
    try {
        DecayModel m = fit_exponential(pts);
        if (m.lambda > 0.0) return m;
    } catch (const insufficient_data_error&) {
    }
    return std::nullopt;
}

}  // namespace detail

// Rates for assign_periods: a user gets a personal lambda once they have
// enough completed intervals; everyone else inherits their activity group's
// pooled fit where that converges.
inline RateAssignment fit_user_rates(const StabilityAnalysis& analysis, const GraphStore& store,
                                     const RateOptions& opts = {}) {
    if (opts.group_count == 0) throw input_error("group count must be positive");
    RateAssignment out;

    for (const auto& [user, lengths] : analysis.intervals_by_user) {
        if (lengths.size() < opts.min_intervals) continue;
        if (auto m = detail::try_interval_fit(lengths, opts.sensitivity_d))
            out.personal.emplace(user, m->lambda);
    }

    std::vector<std::pair<std::size_t, UserId>> by_activity;
    for (UserId u : store.users())
        by_activity.emplace_back(store.user_ratings(u).size(), u);
    std::sort(by_activity.begin(), by_activity.end());

    std::size_t n = by_activity.size();
    std::size_t g_count = std::min(opts.group_count, std::max<std::size_t>(n, 1));
    out.groups.resize(g_count);
    for (std::size_t g = 0; g < g_count && n > 0; ++g) {
        std::size_t lo = g * n / g_count;
        std::size_t hi = (g + 1) * n / g_count;
        std::vector<std::size_t> pooled;
        for (std::size_t i = lo; i < hi; ++i) {
            UserId u = by_activity[i].second;
            out.groups[g].members.push_back(u);
            auto it = analysis.intervals_by_user.find(u);
            if (it != analysis.intervals_by_user.end())
                pooled.insert(pooled.end(), it->second.begin(), it->second.end());
        }
        out.groups[g].interval_count = pooled.size();
        if (pooled.size() >= opts.min_intervals)
            out.groups[g].model = detail::try_interval_fit(pooled, opts.sensitivity_d);
    }

    for (std::size_t g = 0; g < g_count; ++g) {
        for (UserId u : out.groups[g].members) {
            auto it = out.personal.find(u);
            if (it != out.personal.end())
                out.lambda_by_user.emplace(u, it->second);
            else if (out.groups[g].model)
                out.lambda_by_user.emplace(u, out.groups[g].model->lambda);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV artifacts.  All numeric cells use 6 significant digits; files are
// headered even when empty.

// Table 1: one row per pair, one column per bucket, empty cells where the
// coefficient is not computable.  Column labels carry the bucket's inclusive
// end timestamp (the as-of instant of that column's values).
inline void write_table_csv(std::ostream& out, const GraphStore& store,
                            const std::vector<UserPair>& pairs, const TimeGrid& grid,
                            const SimilarityOptions& opts = {}, std::size_t limit = 0) {
    out << "userId1,userId2";
    for (std::size_t i = 0; i < grid.bucket_count; ++i) out << ",k@" << grid.cutoff(i);
    out << '\n';

    std::size_t n = pairs.size();
    if (limit > 0 && limit < n) n = limit;
    constexpr std::size_t kChunk = 1024;
    std::vector<std::string> rows;
    for (std::size_t base = 0; base < n; base += kChunk) {
        std::size_t count = std::min(kChunk, n - base);
        rows.assign(count, {});
        detail::parallel_chunks(count, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                const UserPair& pair = pairs[base + i];
                auto series = build_series(store, pair, grid, opts);
                std::string row =
                    std::to_string(pair.a) + ',' + std::to_string(pair.b);
                for (const auto& v : series.values) {
                    row += ',';
                    if (v) row += format_sig6(*v);
                }
                row += '\n';
                rows[i] = std::move(row);
            }
        });
        for (const auto& r : rows) out << r;
    }
}

inline void write_histogram_csv(std::ostream& out, const IntervalHistogram& hist) {
    out << "n,count\n";
    for (const auto& [n, c] : histogram_points(hist))
        out << format_sig6(n) << ',' << format_sig6(c) << '\n';
}

inline void write_smoothed_csv(std::ostream& out,
                               const std::vector<std::pair<std::size_t, double>>& smoothed) {
    out << "n,smoothed_count\n";
    for (const auto& [n, v] : smoothed) out << n << ',' << format_sig6(v) << '\n';
}

inline void write_survival_csv(std::ostream& out, const SurvivalCurve& curve) {
    out << "t,k\n";
    for (std::size_t t = 0; t < curve.values.size(); ++t)
        out << t << ',' << curve.values[t] << '\n';
}

inline void write_replay_csv(std::ostream& out, const std::vector<ReplayCheckpoint>& rows,
                             const std::string& policy_name) {
    out << "time,policy,recompute_count,mean_service_time,precision,recall,n_fr,n_ir\n";
    for (const auto& row : rows) {
        out << row.time << ',' << policy_name << ',' << row.recompute_visits << ','
            << format_sig6(row.mean_service_time) << ',';
        if (row.precision) out << format_sig6(*row.precision);
        out << ',';
        if (row.recall) out << format_sig6(*row.recall);
        out << ',' << format_sig6(row.n_fr) << ',' << format_sig6(row.n_ir) << '\n';
    }
}

}  // namespace simdecay
