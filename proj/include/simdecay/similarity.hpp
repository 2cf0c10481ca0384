#pragma once

// Pearson user-similarity coefficients, in the definitional mean-deviation
// form and the accumulator form used for incremental recomputation.  Both
// sum over co-rated items only; pairs with too little overlap or zero
// rating variance yield no coefficient rather than 0 or an error.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "simdecay/store.hpp"
#include "simdecay/types.hpp"

namespace simdecay {

struct SimilarityOptions {
    std::size_t min_overlap = 3;   // minimum co-rated items
    double variance_tol = 1e-12;   // mean-square deviation below this counts as zero variance
    double clamp_tol = 1e-12;      // rounding excursions beyond +/-1 are clamped
};

// Aligned rating vectors over the items both users rated.
struct PairVectors {
    std::vector<ItemId> co_items;  // strictly ascending
    std::vector<double> r1;
    std::vector<double> r2;

    std::size_t n() const { return co_items.size(); }
};

struct SimilarityAccumulators {
    std::size_t n = 0;
    double sum1 = 0.0;
    double sum2 = 0.0;
    double sum1sq = 0.0;
    double sum2sq = 0.0;
    double sum12 = 0.0;

    void add(double a, double b) {
        ++n;
        sum1 += a;
        sum2 += b;
        sum1sq += a * a;
        sum2sq += b * b;
        sum12 += a * b;
    }

    void remove(double a, double b) {
        --n;
        sum1 -= a;
        sum2 -= b;
        sum1sq -= a * a;
        sum2sq -= b * b;
        sum12 -= a * b;
    }
};

inline SimilarityAccumulators accumulate(const PairVectors& pv) {
    SimilarityAccumulators acc;
    for (std::size_t i = 0; i < pv.n(); ++i) acc.add(pv.r1[i], pv.r2[i]);
    return acc;
}

// Merge of two latest-rating-per-item maps over their shared items.
inline PairVectors co_rated(const std::map<ItemId, double>& m1,
                            const std::map<ItemId, double>& m2) {
    PairVectors pv;
    auto it1 = m1.begin();
    auto it2 = m2.begin();
    while (it1 != m1.end() && it2 != m2.end()) {
        if (it1->first < it2->first) {
            ++it1;
        } else if (it2->first < it1->first) {
            ++it2;
        } else {
            pv.co_items.push_back(it1->first);
            pv.r1.push_back(it1->second);
            pv.r2.push_back(it2->second);
            ++it1;
            ++it2;
        }
    }
    return pv;
}

// Items both users rated at time <= asof, with their latest ratings.
inline PairVectors co_rated(const GraphStore& store, UserId u1, UserId u2, Timestamp asof) {
    return co_rated(store.ratings_asof(u1, asof), store.ratings_asof(u2, asof));
}

namespace detail {

inline std::optional<double> clamp_coefficient(double k, double tol) {
    if (k > 1.0) {
        if (k > 1.0 + tol) return std::nullopt;  // not expected; guarded by variance checks
        return 1.0;
    }
    if (k < -1.0) {
        if (k < -1.0 - tol) return std::nullopt;
        return -1.0;
    }
    return k;
}

}  // namespace detail

// Mean-deviation form: sum((r1-m1)(r2-m2)) / (sqrt(sum((r1-m1)^2)) sqrt(sum((r2-m2)^2))).
inline std::optional<double> pearson_definitional(const PairVectors& pv,
                                                  const SimilarityOptions& opts = {}) {
    std::size_t n = pv.n();
    if (n < opts.min_overlap || n == 0) return std::nullopt;
    double mean1 = 0.0, mean2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean1 += pv.r1[i];
        mean2 += pv.r2[i];
    }
    mean1 /= static_cast<double>(n);
    mean2 /= static_cast<double>(n);
    double num = 0.0, den1 = 0.0, den2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d1 = pv.r1[i] - mean1;
        double d2 = pv.r2[i] - mean2;
        num += d1 * d2;
        den1 += d1 * d1;
        den2 += d2 * d2;
    }
    if (den1 <= opts.variance_tol * static_cast<double>(n) ||
        den2 <= opts.variance_tol * static_cast<double>(n))
        return std::nullopt;
    return detail::clamp_coefficient(num / (std::sqrt(den1) * std::sqrt(den2)), opts.clamp_tol);
}

// Accumulator form: (n*sum12 - sum1*sum2) / (sqrt(n*sum1sq - sum1^2) sqrt(n*sum2sq - sum2^2)).
// The radicand equals n times the deviation sum of squares, so the absence
// conditions line up with the definitional form.
inline std::optional<double> pearson_fast(const SimilarityAccumulators& acc,
                                          const SimilarityOptions& opts = {}) {
    std::size_t n = acc.n;
    if (n < opts.min_overlap || n == 0) return std::nullopt;
    double dn = static_cast<double>(n);
    double rad1 = dn * acc.sum1sq - acc.sum1 * acc.sum1;
    double rad2 = dn * acc.sum2sq - acc.sum2 * acc.sum2;
    if (rad1 <= opts.variance_tol * dn * dn || rad2 <= opts.variance_tol * dn * dn)
        return std::nullopt;
    double num = dn * acc.sum12 - acc.sum1 * acc.sum2;
    return detail::clamp_coefficient(num / (std::sqrt(rad1) * std::sqrt(rad2)), opts.clamp_tol);
}

// Coefficient for a user pair from the store state at `asof`.
inline std::optional<double> compute_pair(const GraphStore& store, const UserPair& pair,
                                          Timestamp asof, const SimilarityOptions& opts = {}) {
    PairVectors pv = co_rated(store, pair.a, pair.b, asof);
    return pearson_fast(accumulate(pv), opts);
}

// Number of distinct co-rated items for every user pair that shares at
// least one item, over the whole log.  Uses a dense triangular counter for
// small user populations and a hash map beyond that.
inline std::vector<std::pair<UserPair, std::size_t>> co_rating_counts(const GraphStore& store) {
    std::vector<UserId> ids(store.users().begin(), store.users().end());
    std::size_t u_count = ids.size();
    std::vector<std::vector<std::uint32_t>> item_raters;
    {
        std::unordered_map<ItemId, std::size_t> item_slot;
        for (std::size_t ui = 0; ui < u_count; ++ui) {
            std::unordered_set<ItemId> seen;
            for (const auto& rec : store.user_ratings(ids[ui])) {
                if (!seen.insert(rec.item_id).second) continue;
                auto [it, fresh] = item_slot.try_emplace(rec.item_id, item_raters.size());
                if (fresh) item_raters.emplace_back();
                item_raters[it->second].push_back(static_cast<std::uint32_t>(ui));
            }
        }
    }

    constexpr std::size_t kDenseLimit = 4096;
    std::vector<std::pair<UserPair, std::size_t>> out;
    auto tri_index = [u_count](std::size_t i, std::size_t j) {
        return i * u_count - i * (i + 1) / 2 + (j - i - 1);
    };
    if (u_count <= kDenseLimit) {
        std::vector<std::uint32_t> counts(u_count * (u_count - 1) / 2, 0);
        for (auto& raters : item_raters) {
            std::sort(raters.begin(), raters.end());
            for (std::size_t x = 0; x < raters.size(); ++x)
                for (std::size_t y = x + 1; y < raters.size(); ++y)
                    ++counts[tri_index(raters[x], raters[y])];
        }
        for (std::size_t i = 0; i < u_count; ++i)
            for (std::size_t j = i + 1; j < u_count; ++j) {
                std::uint32_t c = counts[tri_index(i, j)];
                if (c > 0) out.emplace_back(UserPair(ids[i], ids[j]), c);
            }
    } else {
        std::unordered_map<std::uint64_t, std::uint32_t> counts;
        for (auto& raters : item_raters) {
            std::sort(raters.begin(), raters.end());
            for (std::size_t x = 0; x < raters.size(); ++x)
                for (std::size_t y = x + 1; y < raters.size(); ++y)
                    ++counts[(static_cast<std::uint64_t>(raters[x]) << 32) | raters[y]];
        }
        out.reserve(counts.size());
        for (const auto& [key, c] : counts)
            out.emplace_back(UserPair(ids[key >> 32], ids[key & 0xffffffffu]), c);
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    return out;
}

}  // namespace simdecay
