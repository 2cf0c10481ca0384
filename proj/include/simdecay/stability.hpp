#pragma once

// Per-pair similarity time series on a bucket grid, stability-interval
// extraction against a sensitivity threshold, and the derived histogram,
// smoothed curve, probability function and survival curve.

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "simdecay/similarity.hpp"
#include "simdecay/store.hpp"
#include "simdecay/types.hpp"

namespace simdecay {

struct TimeGrid {
    Timestamp start = 0;
    Timestamp bucket_len = 1000000;  // seconds
    std::size_t bucket_count = 0;

    // Bucket i covers [start + i*len, start + (i+1)*len).
    Timestamp bucket_end_exclusive(std::size_t i) const {
        return start + static_cast<Timestamp>(i + 1) * bucket_len;
    }
    // Inclusive cutoff for "all events inside buckets 0..i".
    Timestamp cutoff(std::size_t i) const { return bucket_end_exclusive(i) - 1; }

    std::size_t bucket_of(Timestamp t) const {
        if (t <= start) return 0;
        auto idx = static_cast<std::size_t>((t - start) / bucket_len);
        return idx >= bucket_count ? bucket_count - 1 : idx;
    }
};

inline TimeGrid make_grid(const GraphStore& store, Timestamp bucket_len) {
    if (bucket_len <= 0) throw input_error("bucket length must be positive");
    TimeGrid grid;
    grid.bucket_len = bucket_len;
    if (store.rating_count() == 0) return grid;
    grid.start = store.min_timestamp();
    grid.bucket_count =
        static_cast<std::size_t>((store.max_timestamp() - grid.start) / bucket_len) + 1;
    return grid;
}

struct SimilaritySeries {
    UserPair pair;
    std::vector<std::optional<double>> values;  // one slot per bucket
    // First/last bucket of joint activity; values outside are absent.
    std::optional<std::pair<std::size_t, std::size_t>> active_range;
};

struct IntervalHistogram {
    std::map<std::size_t, std::size_t> counts;  // length (buckets) -> N(n)
    std::size_t total_intervals = 0;
    double sensitivity = 0.01;
};

struct SurvivalCurve {
    std::vector<std::int64_t> values;  // k(t) for t = 0..max interval length
};

// Cumulative-prefix series: values[i] is the pair coefficient computed from
// every event in buckets 0..i.  The accumulators are maintained
// incrementally while walking both users' rating lists, which matches a
// fresh per-bucket recomputation exactly on half-star data.
inline SimilaritySeries build_series(const GraphStore& store, const UserPair& pair,
                                     const TimeGrid& grid,
                                     const SimilarityOptions& opts = {}) {
    if (!store.has_user(pair.a))
        throw not_found_error("unknown user " + std::to_string(pair.a));
    if (!store.has_user(pair.b))
        throw not_found_error("unknown user " + std::to_string(pair.b));

    SimilaritySeries series;
    series.pair = pair;
    series.values.assign(grid.bucket_count, std::nullopt);

    const auto& la = store.user_ratings(pair.a);
    const auto& lb = store.user_ratings(pair.b);
    if (la.empty() || lb.empty() || grid.bucket_count == 0) return series;

    std::size_t first_active = std::max(grid.bucket_of(la.front().timestamp),
                                        grid.bucket_of(lb.front().timestamp));
    std::size_t last_active = std::min(grid.bucket_of(la.back().timestamp),
                                       grid.bucket_of(lb.back().timestamp));
    if (first_active > last_active) return series;
    series.active_range = {first_active, last_active};

    std::map<ItemId, double> cur_a, cur_b;
    SimilarityAccumulators acc;
    auto apply = [&acc](std::map<ItemId, double>& mine, const std::map<ItemId, double>& theirs,
                        ItemId item, double rating, bool mine_is_first) {
        auto other_it = theirs.find(item);
        auto mine_it = mine.find(item);
        if (other_it != theirs.end() && mine_it != mine.end()) {
            if (mine_is_first)
                acc.remove(mine_it->second, other_it->second);
            else
                acc.remove(other_it->second, mine_it->second);
        }
        mine[item] = rating;
        if (other_it != theirs.end()) {
            if (mine_is_first)
                acc.add(rating, other_it->second);
            else
                acc.add(other_it->second, rating);
        }
    };

    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < grid.bucket_count; ++i) {
        Timestamp cut = grid.cutoff(i);
        while (ia < la.size() && la[ia].timestamp <= cut) {
            apply(cur_a, cur_b, la[ia].item_id, la[ia].rating, true);
            ++ia;
        }
        while (ib < lb.size() && lb[ib].timestamp <= cut) {
            apply(cur_b, cur_a, lb[ib].item_id, lb[ib].rating, false);
            ++ib;
        }
        if (i >= first_active && i <= last_active)
            series.values[i] = pearson_fast(acc, opts);
        if (i > last_active) break;
    }
    return series;
}

// Scans present values with anchor semantics: an interval ends at the first
// t2 where the value departs from the anchor value by more than d, its
// length (t2 - t1 buckets) is recorded, and t2 anchors the next interval.
// Runs interrupted by an absent value or by the series end are discarded,
// since their completion cannot be observed.
inline std::vector<std::size_t> stability_intervals(const SimilaritySeries& series, double d) {
    if (d <= 0.0) throw input_error("sensitivity d must be positive");
    std::vector<std::size_t> lengths;
    bool anchored = false;
    std::size_t anchor_t = 0;
    double anchor_value = 0.0;
    for (std::size_t t = 0; t < series.values.size(); ++t) {
        const auto& v = series.values[t];
        if (!v) {
            anchored = false;
            continue;
        }
        if (!anchored) {
            anchored = true;
            anchor_t = t;
            anchor_value = *v;
            continue;
        }
        if (std::abs(anchor_value - *v) > d) {
            lengths.push_back(t - anchor_t);
            anchor_t = t;
            anchor_value = *v;
        }
    }
    return lengths;
}

inline IntervalHistogram histogram(const std::vector<std::size_t>& lengths,
                                   double sensitivity = 0.01) {
    IntervalHistogram hist;
    hist.sensitivity = sensitivity;
    for (std::size_t n : lengths) {
        ++hist.counts[n];
        ++hist.total_intervals;
    }
    return hist;
}

// Centered moving average over the dense length range [min key, max key];
// gaps count as zero, edges use the truncated window.
inline std::vector<std::pair<std::size_t, double>> moving_average(const IntervalHistogram& hist,
                                                                  std::size_t window) {
    if (window < 1 || window % 2 == 0)
        throw input_error("smoothing window must be odd and >= 1");
    std::vector<std::pair<std::size_t, double>> out;
    if (hist.counts.empty()) return out;
    std::size_t lo = hist.counts.begin()->first;
    std::size_t hi = hist.counts.rbegin()->first;
    auto count_at = [&hist](std::size_t n) -> double {
        auto it = hist.counts.find(n);
        return it == hist.counts.end() ? 0.0 : static_cast<double>(it->second);
    };
    std::size_t half = window / 2;
    for (std::size_t n = lo; n <= hi; ++n) {
        std::size_t from = n - lo >= half ? n - half : lo;
        std::size_t to = n + half <= hi ? n + half : hi;
        double sum = 0.0;
        for (std::size_t m = from; m <= to; ++m) sum += count_at(m);
        out.emplace_back(n, sum / static_cast<double>(to - from + 1));
    }
    return out;
}

// p(n) = N(n) / sum N(i).
inline std::map<std::size_t, double> probability_function(const IntervalHistogram& hist) {
    if (hist.total_intervals == 0)
        throw input_error("probability function of an empty histogram is undefined");
    std::map<std::size_t, double> p;
    double total = static_cast<double>(hist.total_intervals);
    for (const auto& [n, count] : hist.counts) p[n] = static_cast<double>(count) / total;
    return p;
}

// k(0) = total_pairs, k(t) = k(t-1) - N(t).
inline SurvivalCurve survival_curve(const IntervalHistogram& hist, std::size_t total_pairs) {
    SurvivalCurve curve;
    std::size_t max_len = hist.counts.empty() ? 0 : hist.counts.rbegin()->first;
    curve.values.reserve(max_len + 1);
    std::int64_t k = static_cast<std::int64_t>(total_pairs);
    curve.values.push_back(k);
    for (std::size_t t = 1; t <= max_len; ++t) {
        auto it = hist.counts.find(t);
        if (it != hist.counts.end()) k -= static_cast<std::int64_t>(it->second);
        if (k < 0)
            throw inconsistency_error("survival count fell below zero at t=" + std::to_string(t));
        curve.values.push_back(k);
    }
    return curve;
}

}  // namespace simdecay
