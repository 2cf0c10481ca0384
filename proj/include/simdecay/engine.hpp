#pragma once

// Recommendation serving on top of the similarity graph: rating prediction,
// top-N lists, offline precision/recall, event-log replay under the three
// recomputation policies, and bot-ring detection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simdecay/decay.hpp"
#include "simdecay/parallel.hpp"
#include "simdecay/scheduler.hpp"
#include "simdecay/similarity.hpp"
#include "simdecay/stability.hpp"
#include "simdecay/store.hpp"
#include "simdecay/types.hpp"

namespace simdecay {

// ---------------------------------------------------------------------------
// Rating prediction and top-N recommendation

struct PredictOptions {
    std::size_t k_neighbors = 20;       // most similar users considered
    double min_coefficient = -1.0;      // neighbors below this similarity are ignored
    double topn_min_coefficient = 0.0;  // stricter floor when forming top-N lists
    double rating_min = 0.5;
    double rating_max = 5.0;
};

struct Prediction {
    UserId user_id = 0;
    ItemId item_id = 0;
    double predicted_rating = 0.0;
    std::size_t support = 0;  // neighbors whose rating entered the sum
};

struct RankedItem {
    ItemId item_id = 0;
    double predicted = 0.0;
    std::size_t support = 0;
};

namespace detail {

inline double mean_rating(const std::map<ItemId, double>& ratings) {
    double sum = 0.0;
    for (const auto& [item, r] : ratings) sum += r;
    return ratings.empty() ? 0.0 : sum / static_cast<double>(ratings.size());
}

// The target user's view of the graph frozen at one instant, reusable across
// every item scored in a top-N pass.
struct PredictContext {
    std::map<ItemId, double> own;
    double own_mean = 0.0;
    struct Neighbor {
        UserId id = 0;
        double coefficient = 0.0;
        std::map<ItemId, double> ratings;
        double mean = 0.0;
    };
    std::vector<Neighbor> neighbors;  // coefficient desc, id asc, at most k
};

inline PredictContext make_context(const GraphStore& store, UserId user, Timestamp asof,
                                   const PredictOptions& opts, double floor) {
    if (!store.has_user(user))
        throw not_found_error("unknown user " + std::to_string(user));
    PredictContext ctx;
    ctx.own = store.ratings_asof(user, asof);
    ctx.own_mean = mean_rating(ctx.own);

    std::vector<std::pair<double, UserId>> ranked;
    for (const auto& [pair, edge] : store.similarities()) {
        if (!pair.contains(user)) continue;
        if (edge.coefficient < floor) continue;
        ranked.emplace_back(edge.coefficient, pair.other(user));
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    if (ranked.size() > opts.k_neighbors) ranked.resize(opts.k_neighbors);

    for (const auto& [coeff, id] : ranked) {
        PredictContext::Neighbor nb;
        nb.id = id;
        nb.coefficient = coeff;
        nb.ratings = store.ratings_asof(id, asof);
        if (nb.ratings.empty()) continue;
        nb.mean = mean_rating(nb.ratings);
        ctx.neighbors.push_back(std::move(nb));
    }
    return ctx;
}

inline std::optional<Prediction> predict_with(const PredictContext& ctx, ItemId item,
                                              const PredictOptions& opts) {
    double num = 0.0;
    double den = 0.0;
    std::size_t support = 0;
    for (const auto& nb : ctx.neighbors) {
        auto it = nb.ratings.find(item);
        if (it == nb.ratings.end()) continue;
        num += nb.coefficient * (it->second - nb.mean);
        den += std::abs(nb.coefficient);
        ++support;
    }
    if (support == 0 || den <= 0.0) return std::nullopt;
    Prediction p;
    p.item_id = item;
    p.predicted_rating = std::clamp(ctx.own_mean + num / den, opts.rating_min, opts.rating_max);
    p.support = support;
    return p;
}

}  // namespace detail

// Mean-centered weighted k-NN prediction over the user's similarity
// neighborhood at `asof`.  Absent when no selected neighbor rated the item.
inline std::optional<Prediction> predict(const GraphStore& store, UserId user, ItemId item,
                                         Timestamp asof, const PredictOptions& opts = {}) {
    auto ctx = detail::make_context(store, user, asof, opts, opts.min_coefficient);
    auto p = detail::predict_with(ctx, item, opts);
    if (p) p->user_id = user;
    return p;
}

// Items the user has not rated, ranked by predicted rating descending with
// item id as the tie-break.  Only items some neighbor rated can appear;
// negatively correlated neighbors are excluded from list formation.
inline std::vector<RankedItem> top_n(const GraphStore& store, UserId user, Timestamp asof,
                                     std::size_t n, const PredictOptions& opts = {}) {
    double floor = std::max(opts.min_coefficient, opts.topn_min_coefficient);
    auto ctx = detail::make_context(store, user, asof, opts, floor);
    std::set<ItemId> candidates;
    for (const auto& nb : ctx.neighbors)
        for (const auto& [item, r] : nb.ratings)
            if (!ctx.own.count(item)) candidates.insert(item);

    std::vector<RankedItem> scored;
    for (ItemId item : candidates) {
        auto p = detail::predict_with(ctx, item, opts);
        if (p) scored.push_back({item, p->predicted_rating, p->support});
    }
    std::sort(scored.begin(), scored.end(), [](const RankedItem& x, const RankedItem& y) {
        if (x.predicted != y.predicted) return x.predicted > y.predicted;
        return x.item_id < y.item_id;
    });
    if (scored.size() > n) scored.resize(n);
    return scored;
}

// ---------------------------------------------------------------------------
// Similarity maintenance

// Recomputes the coefficient of every pair with enough co-rated items as of
// `asof` and rewrites the store's edge set to match: fresh values are
// written (keeping any periods already assigned), pairs whose coefficient is
// no longer defined are dropped.  Returns the number of live edges.
inline std::size_t refresh_edges(GraphStore& store, Timestamp asof,
                                 const SimilarityOptions& opts = {},
                                 DurationSec default_rp = 1'000'000.0) {
    if (!(default_rp > 0.0)) throw input_error("default recompute period must be positive");
    auto candidates = co_rating_counts(store);
    std::erase_if(candidates, [&](const auto& c) { return c.second < opts.min_overlap; });

    std::vector<std::optional<double>> fresh(candidates.size());
    detail::parallel_chunks(candidates.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
            fresh[i] = compute_pair(store, candidates[i].first, asof, opts);
    });

    std::map<UserPair, SimilarityEdge> next;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!fresh[i]) continue;
        const UserPair& pair = candidates[i].first;
        SimilarityEdge edge;
        if (auto existing = store.get_edge(pair)) edge = *existing;
        edge.pair = pair;
        edge.coefficient = *fresh[i];
        if (!(edge.average_rp > 0.0)) edge.average_rp = default_rp;
        edge.last_recount_time = asof;
        next.emplace(pair, edge);
    }
    store.similarities() = std::move(next);
    return store.similarities().size();
}

// ---------------------------------------------------------------------------
// Offline evaluation

struct EvalOptions {
    std::size_t top_n = 10;
    double relevance_threshold = 3.5;  // ratings at or above this count as relevant
    PredictOptions predict;
};

struct EvaluationResult {
    double precision = 0.0;
    double recall = 0.0;
    std::size_t evaluated_users = 0;
};

// Scores top-N lists built from the store's state at the split against
// per-user relevant sets; precision and recall are averaged over the users
// in `relevant` (all of which hold at least one item).  Users the store has
// never seen contribute zero to both averages.
inline EvaluationResult evaluate_topn(const GraphStore& store, Timestamp split_time,
                                      std::size_t n,
                                      const std::map<UserId, std::set<ItemId>>& relevant,
                                      const PredictOptions& opts = {}) {
    EvaluationResult res;
    double psum = 0.0;
    double rsum = 0.0;
    for (const auto& [user, rel] : relevant) {
        if (rel.empty()) continue;
        ++res.evaluated_users;
        if (!store.has_user(user)) continue;
        auto recs = top_n(store, user, split_time, n, opts);
        if (recs.empty()) continue;
        std::size_t hits = 0;
        for (const auto& r : recs) hits += rel.count(r.item_id);
        psum += static_cast<double>(hits) / static_cast<double>(recs.size());
        rsum += static_cast<double>(hits) / static_cast<double>(rel.size());
    }
    if (res.evaluated_users == 0)
        throw insufficient_data_error("no users with relevant test-period items");
    res.precision = psum / static_cast<double>(res.evaluated_users);
    res.recall = rsum / static_cast<double>(res.evaluated_users);
    return res;
}

// Relevant sets for a time split: items a user rated at or above the
// threshold strictly after the split, excluding anything they had already
// rated by then.
inline std::map<UserId, std::set<ItemId>> relevant_after(const GraphStore& store,
                                                         Timestamp split_time,
                                                         double relevance_threshold) {
    std::map<UserId, std::set<ItemId>> relevant;
    for (UserId u : store.users()) {
        auto train = store.ratings_asof(u, split_time);
        std::set<ItemId> rel;
        for (const auto& rec : store.user_ratings(u)) {
            if (rec.timestamp <= split_time) continue;
            if (rec.rating < relevance_threshold) continue;
            if (train.count(rec.item_id)) continue;
            rel.insert(rec.item_id);
        }
        if (!rel.empty()) relevant.emplace(u, std::move(rel));
    }
    return relevant;
}

// Temporal-split evaluation of the store's own log.  The similarity edges
// currently in the store are used as-is; refresh them as of the split first
// if they may be stale.
inline EvaluationResult precision_recall(const GraphStore& store, Timestamp split_time,
                                         const EvalOptions& opts = {}) {
    if (store.rating_count() == 0) throw insufficient_data_error("empty rating log");
    if (split_time < store.min_timestamp() || split_time >= store.max_timestamp())
        throw input_error("split time must lie inside the log's time range");
    auto relevant = relevant_after(store, split_time, opts.relevance_threshold);
    return evaluate_topn(store, split_time, opts.top_n, relevant, opts.predict);
}

// ---------------------------------------------------------------------------
// Event-log replay

enum class Policy { always, periodic, adaptive };

inline Policy parse_policy(std::string_view s) {
    if (s == "always" || s == "ALWAYS") return Policy::always;
    if (s == "periodic" || s == "PERIODIC") return Policy::periodic;
    if (s == "adaptive" || s == "ADAPTIVE") return Policy::adaptive;
    throw input_error("unknown policy '" + std::string(s) + "'");
}

inline std::string to_string(Policy p) {
    switch (p) {
        case Policy::always: return "always";
        case Policy::periodic: return "periodic";
        case Policy::adaptive: return "adaptive";
    }
    return "?";
}

struct ReplayConfig {
    Policy policy = Policy::adaptive;
    DurationSec periodic_delta = 0.0;  // recompute period under Policy::periodic, seconds
    double lambda = 0.0;               // population decay rate per bucket (adaptive)
    double p_st = 0.36787944117144233;  // survival level defining the adaptive period
    std::map<UserId, double> per_user_lambdas;  // optional per-user rates, per bucket
    Timestamp bucket_len = 1'000'000;  // seconds per horizon unit and checkpoint row
    std::optional<Timestamp> split_time;  // when set, evaluate top-N at the split
    std::size_t top_n = 10;
    double relevance_threshold = 3.5;
    double sensitivity_d = 0.01;  // coefficient movement that counts as a real change
    SimilarityOptions similarity;
    PredictOptions predict;
};

struct ReplayCheckpoint {
    Timestamp time = 0;  // inclusive end of the reported bucket
    std::size_t served_visits = 0;
    std::size_t recompute_visits = 0;
    double mean_service_time = 0.0;  // running average
    std::optional<double> precision;  // set on rows at or past the split
    std::optional<double> recall;
    double n_fr = 0.0;  // fraction of recomputes that found nothing moved
    double n_ir = 0.0;  // fraction of cached serves whose truth had moved
};

struct ReplayMetrics {
    std::size_t served_requests = 0;   // one per rating event
    std::size_t recompute_count = 0;   // visits that paid t_fr
    double simulated_mean_service_time = 0.0;
    double n_fr_fraction = 0.0;  // unneeded recomputes / recompute visits
    double n_ir_fraction = 0.0;  // stale serves / cached visits
    std::optional<double> precision_at_n;
    std::optional<double> recall_at_n;
    std::size_t evaluated_users = 0;
    std::vector<ReplayCheckpoint> checkpoints;  // one per bucket of the log's span
};

namespace detail {

struct ReplayState {
    GraphStore store;
    std::unordered_map<UserId, std::map<ItemId, double>> current;  // latest rating per item
    std::unordered_map<UserId, std::set<UserId>> adjacency;        // live similarity edges
    std::unordered_map<UserId, Timestamp> last_attempt;            // last recompute per user
    std::unordered_map<ItemId, std::vector<UserId>> raters;        // distinct raters per item
};

// Fresh coefficients for every pair of `user` with enough co-rated items,
// from ratings ingested so far.
inline std::map<UserId, double> fresh_neighbor_values(const ReplayState& st, UserId user,
                                                      const SimilarityOptions& opts) {
    std::map<UserId, double> fresh;
    auto own_it = st.current.find(user);
    if (own_it == st.current.end()) return fresh;
    const auto& own = own_it->second;

    std::set<UserId> candidates;
    for (const auto& [item, r] : own) {
        auto it = st.raters.find(item);
        if (it == st.raters.end()) continue;
        for (UserId v : it->second)
            if (v != user) candidates.insert(v);
    }
    for (UserId v : candidates) {
        const auto& theirs = st.current.at(v);
        auto k = pearson_fast(accumulate(co_rated(own, theirs)), opts);
        if (k) fresh.emplace(v, *k);
    }
    return fresh;
}

// True when the cached edges of `user` differ from the fresh values, by more
// than d or by presence.
inline bool truth_moved(const ReplayState& st, UserId user,
                        const std::map<UserId, double>& fresh, double d) {
    auto adj_it = st.adjacency.find(user);
    std::size_t cached_count = adj_it == st.adjacency.end() ? 0 : adj_it->second.size();
    if (cached_count != fresh.size()) return true;
    for (const auto& [v, k] : fresh) {
        if (!adj_it->second.count(v)) return true;
        auto edge = st.store.get_edge(UserPair(user, v));
        if (!edge || std::abs(edge->coefficient - k) > d) return true;
    }
    return false;
}

}  // namespace detail

// Replays a time-ordered rating log from an empty store.  Every event is a
// visit: the rating is ingested, then the user's similarity edges are either
// recomputed (cost t_fr) or served from cache (cost t_ir) according to the
// policy.  Ground truth is tracked on the side to price wasted recomputes
// (n_fr) and stale serves (n_ir).
inline ReplayMetrics replay(const std::vector<RatingEvent>& events, const ReplayConfig& cfg,
                            const ServiceParams& service) {
    validate(service);
    if (events.empty()) throw input_error("cannot replay an empty event log");
    if (cfg.bucket_len <= 0) throw input_error("bucket length must be positive");
    if (!(cfg.sensitivity_d > 0.0)) throw input_error("sensitivity d must be positive");
    if (cfg.policy == Policy::periodic && cfg.periodic_delta < 0.0)
        throw input_error("periodic recompute period must be non-negative");
    if (cfg.policy == Policy::adaptive) {
        require_positive_lambda(cfg.lambda);
        if (!(cfg.p_st > 0.0 && cfg.p_st < 1.0))
            throw input_error("stability probability must be in (0, 1)");
    }
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].timestamp < events[i - 1].timestamp)
            throw input_error("replay requires a time-ordered event log");

    double scale = static_cast<double>(cfg.bucket_len);
    DurationSec default_rp =
        cfg.lambda > 0.0 ? stable_horizon(cfg.lambda, cfg.p_st) * scale : scale;
    auto period_for = [&](const UserPair& pair) -> std::optional<DurationSec> {
        std::optional<double> lambda_pair;
        for (UserId u : {pair.a, pair.b}) {
            auto it = cfg.per_user_lambdas.find(u);
            if (it != cfg.per_user_lambdas.end() && it->second > 0.0)
                lambda_pair = lambda_pair ? std::max(*lambda_pair, it->second) : it->second;
        }
        if (!lambda_pair) return std::nullopt;
        return stable_horizon(*lambda_pair, cfg.p_st) * scale;
    };

    detail::ReplayState st;
    ReplayMetrics metrics;
    std::size_t unneeded = 0;
    std::size_t missed = 0;

    TimeGrid grid;
    grid.start = events.front().timestamp;
    grid.bucket_len = cfg.bucket_len;
    grid.bucket_count = static_cast<std::size_t>(
                            (events.back().timestamp - grid.start) / cfg.bucket_len) +
                        1;
    std::size_t next_row = 0;

    auto emit_row = [&](Timestamp at) {
        ReplayCheckpoint row;
        row.time = at;
        row.served_visits = metrics.served_requests;
        row.recompute_visits = metrics.recompute_count;
        std::size_t cached = metrics.served_requests - metrics.recompute_count;
        if (metrics.served_requests > 0)
            row.mean_service_time =
                (static_cast<double>(metrics.recompute_count) * service.t_fr +
                 static_cast<double>(cached) * service.t_ir) /
                static_cast<double>(metrics.served_requests);
        if (metrics.recompute_count > 0)
            row.n_fr = static_cast<double>(unneeded) / static_cast<double>(metrics.recompute_count);
        if (cached > 0) row.n_ir = static_cast<double>(missed) / static_cast<double>(cached);
        row.precision = metrics.precision_at_n;
        row.recall = metrics.recall_at_n;
        metrics.checkpoints.push_back(row);
    };

    bool eval_pending = cfg.split_time.has_value();
    auto run_eval = [&](std::size_t from) {
        std::map<UserId, std::set<ItemId>> relevant;
        for (std::size_t j = from; j < events.size(); ++j) {
            const auto& te = events[j];
            if (te.rating < cfg.relevance_threshold) continue;
            bool seen_before = st.store.has_user(te.user_id) &&
                               st.store.ratings_asof(te.user_id, *cfg.split_time).count(te.item_id);
            if (seen_before) continue;
            relevant[te.user_id].insert(te.item_id);
        }
        try {
            auto res = evaluate_topn(st.store, *cfg.split_time, cfg.top_n, relevant, cfg.predict);
            metrics.precision_at_n = res.precision;
            metrics.recall_at_n = res.recall;
            metrics.evaluated_users = res.evaluated_users;
        } catch (const insufficient_data_error&) {
            // degenerate split: leave the accuracy fields absent
        }
        eval_pending = false;
    };

    for (std::size_t i = 0; i < events.size(); ++i) {
        const RatingEvent& ev = events[i];
        if (eval_pending && ev.timestamp > *cfg.split_time) run_eval(i);
        while (next_row < grid.bucket_count && ev.timestamp >= grid.bucket_end_exclusive(next_row)) {
            emit_row(grid.cutoff(next_row));
            ++next_row;
        }

        st.store.upsert_rating(ev);
        auto [slot, first_rating_of_item] =
            st.current[ev.user_id].insert_or_assign(ev.item_id, ev.rating);
        if (first_rating_of_item) st.raters[ev.item_id].push_back(ev.user_id);

        UserId u = ev.user_id;
        Timestamp now = ev.timestamp;
        auto fresh = detail::fresh_neighbor_values(st, u, cfg.similarity);
        bool moved = detail::truth_moved(st, u, fresh, cfg.sensitivity_d);

        bool due = false;
        switch (cfg.policy) {
            case Policy::always:
                due = true;
                break;
            case Policy::periodic: {
                auto it = st.last_attempt.find(u);
                due = it == st.last_attempt.end() ||
                      static_cast<double>(now) >=
                          static_cast<double>(it->second) + cfg.periodic_delta;
                break;
            }
            case Policy::adaptive: {
                auto adj = st.adjacency.find(u);
                if (adj == st.adjacency.end() || adj->second.empty()) {
                    auto it = st.last_attempt.find(u);
                    due = it == st.last_attempt.end() ||
                          static_cast<double>(now) >=
                              static_cast<double>(it->second) + default_rp;
                } else {
                    for (UserId v : adj->second) {
                        auto edge = st.store.get_edge(UserPair(u, v));
                        if (edge && needs_recompute(*edge, now)) {
                            due = true;
                            break;
                        }
                    }
                }
                break;
            }
        }

        if (due) {
            ++metrics.recompute_count;
            if (!moved) ++unneeded;
            for (const auto& [v, k] : fresh) {
                UserPair pair(u, v);
                SimilarityEdge edge;
                if (auto existing = st.store.get_edge(pair)) edge = *existing;
                edge.pair = pair;
                edge.coefficient = k;
                edge.average_rp = default_rp;
                edge.recount_period = period_for(pair);
                edge.last_recount_time = now;
                st.store.put_edge(edge);
                st.adjacency[u].insert(v);
                st.adjacency[v].insert(u);
            }
            auto& nbrs = st.adjacency[u];
            for (auto it = nbrs.begin(); it != nbrs.end();) {
                if (fresh.count(*it)) {
                    ++it;
                } else {
                    st.store.erase_edge(UserPair(u, *it));
                    st.adjacency[*it].erase(u);
                    it = nbrs.erase(it);
                }
            }
            st.last_attempt[u] = now;
        } else if (moved) {
            ++missed;
        }
        ++metrics.served_requests;
    }

    if (eval_pending) run_eval(events.size());
    while (next_row < grid.bucket_count) {
        emit_row(grid.cutoff(next_row));
        ++next_row;
    }

    std::size_t cached = metrics.served_requests - metrics.recompute_count;
    metrics.simulated_mean_service_time =
        (static_cast<double>(metrics.recompute_count) * service.t_fr +
         static_cast<double>(cached) * service.t_ir) /
        static_cast<double>(metrics.served_requests);
    if (metrics.recompute_count > 0)
        metrics.n_fr_fraction =
            static_cast<double>(unneeded) / static_cast<double>(metrics.recompute_count);
    if (cached > 0)
        metrics.n_ir_fraction = static_cast<double>(missed) / static_cast<double>(cached);
    return metrics;
}

// ---------------------------------------------------------------------------
// Bot-ring detection

struct BotDetectionOptions {
    double epsilon = 0.01;         // coefficients within [1-eps, 1] count as lockstep
    std::size_t min_duration = 3;  // buckets a run must span to qualify
    std::size_t min_size = 3;      // smallest ring worth reporting
    SimilarityOptions similarity;
};

struct BotRing {
    std::vector<UserId> members;        // ascending
    double min_pairwise_k = 1.0;        // lowest coefficient inside the qualifying runs
    DurationSec stable_duration = 0.0;  // shortest qualifying run among member pairs, seconds
};

// Flags groups of users whose pairwise similarity sits in the lockstep band
// [1-eps, 1] for at least min_duration consecutive buckets.  Qualifying
// pairs are merged into connected components; components under min_size are
// dropped.
inline std::vector<BotRing> detect_bot_rings(const GraphStore& store, const TimeGrid& grid,
                                             const BotDetectionOptions& opts = {}) {
    if (!(opts.epsilon > 0.0 && opts.epsilon < 1.0))
        throw input_error("epsilon must lie in (0, 1)");
    if (opts.min_size < 2) throw input_error("ring size must be at least 2");
    if (opts.min_duration == 0) throw input_error("minimum duration must be positive");

    auto candidates = co_rating_counts(store);
    std::erase_if(candidates,
                  [&](const auto& c) { return c.second < opts.similarity.min_overlap; });

    struct PairRun {
        UserPair pair{0, 1};
        std::size_t len = 0;
        double min_k = 1.0;
    };
    std::vector<std::optional<PairRun>> runs(candidates.size());
    detail::parallel_chunks(candidates.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            auto series = build_series(store, candidates[i].first, grid, opts.similarity);
            std::size_t best_len = 0;
            double best_min = 1.0;
            std::size_t run_len = 0;
            double run_min = 1.0;
            auto flush = [&] {
                if (run_len > best_len) {
                    best_len = run_len;
                    best_min = run_min;
                }
                run_len = 0;
                run_min = 1.0;
            };
            for (const auto& v : series.values) {
                if (v && *v >= 1.0 - opts.epsilon) {
                    ++run_len;
                    run_min = std::min(run_min, *v);
                } else {
                    flush();
                }
            }
            flush();
            if (best_len >= opts.min_duration)
                runs[i] = PairRun{candidates[i].first, best_len, best_min};
        }
    });

    std::map<UserId, UserId> parent;
    auto find = [&](UserId x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::vector<PairRun> qualifying;
    for (const auto& r : runs) {
        if (!r) continue;
        qualifying.push_back(*r);
        for (UserId u : {r->pair.a, r->pair.b})
            if (!parent.count(u)) parent[u] = u;
        parent[find(r->pair.a)] = find(r->pair.b);
    }

    std::map<UserId, BotRing> by_root;
    for (const auto& [u, p] : parent) by_root[find(u)].members.push_back(u);
    for (const auto& r : qualifying) {
        BotRing& ring = by_root[find(r.pair.a)];
        ring.min_pairwise_k = std::min(ring.min_pairwise_k, r.min_k);
        double duration = static_cast<double>(r.len) * static_cast<double>(grid.bucket_len);
        if (ring.stable_duration == 0.0 || duration < ring.stable_duration)
            ring.stable_duration = duration;
    }

    std::vector<BotRing> rings;
    for (auto& [root, ring] : by_root) {
        if (ring.members.size() < opts.min_size) continue;
        std::sort(ring.members.begin(), ring.members.end());
        rings.push_back(std::move(ring));
    }
    std::sort(rings.begin(), rings.end(), [](const BotRing& x, const BotRing& y) {
        return x.members.front() < y.members.front();
    });
    return rings;
}

}  // namespace simdecay
