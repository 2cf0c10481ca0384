#pragma once

// Deterministic event-log fixtures shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "simdecay/store.hpp"
#include "simdecay/types.hpp"

namespace simdecay::testing {

inline GraphStore store_from(const std::vector<RatingEvent>& events) {
    GraphStore store;
    for (const auto& ev : events) store.upsert_rating(ev);
    return store;
}

inline double to_half_star(double x) {
    double r = std::round(x * 2.0) / 2.0;
    return std::min(5.0, std::max(0.5, r));
}

// Fixed-taste users cycling over a small shared item pool on a strict visit
// cadence; every user visits exactly once per tick, so after the first
// |items| ticks all rating maps are constant and no coefficient ever moves.
inline std::vector<RatingEvent> make_stationary_log(std::size_t users = 20,
                                                    std::size_t items = 10,
                                                    std::size_t visits_per_user = 200,
                                                    Timestamp tau_visit = 1000,
                                                    Timestamp start = 100) {
    std::vector<RatingEvent> events;
    events.reserve(users * visits_per_user);
    for (std::size_t k = 0; k < visits_per_user; ++k) {
        Timestamp t = start + static_cast<Timestamp>(k) * tau_visit;
        for (std::size_t u = 1; u <= users; ++u) {
            std::size_t idx = (k + u) % items;
            ItemId item = static_cast<ItemId>(idx + 1);
            double rating = 1.0 + static_cast<double>((u * 3 + idx * 7) % 8) * 0.5;
            events.push_back({static_cast<UserId>(u), item, rating, t});
        }
    }
    return events;
}

// Three taste clusters over block-structured items.  Ratings are a fixed
// function of (user, item), users keep discovering unseen items from their
// own block for the whole log, and every fourth round samples the next
// cluster's block, so cross-cluster overlaps exist too.  A late time split
// therefore leaves unseen well-rated items in the test period.
inline std::vector<RatingEvent> make_desk_log(std::size_t users_per_cluster = 8,
                                              std::size_t clusters = 3,
                                              std::size_t items_per_cluster = 60,
                                              std::size_t rounds = 60,
                                              Timestamp start = 1000,
                                              Timestamp step = 97) {
    std::vector<RatingEvent> events;
    std::size_t users = users_per_cluster * clusters;
    for (std::size_t k = 0; k < rounds; ++k) {
        for (std::size_t uid = 0; uid < users; ++uid) {
            UserId u = static_cast<UserId>(uid + 1);
            std::size_t cu = uid % clusters;
            std::size_t block = (k % 4 == 3) ? (cu + 1) % clusters : cu;
            std::size_t idx = (k * 7 + uid * 3) % items_per_cluster;
            ItemId item = static_cast<ItemId>(block * items_per_cluster + idx + 1);
            bool match = block == cu;
            // Per-(user,item) hashed jitter inside the taste band keeps the
            // cluster preference signal while preventing any organic pair
            // from moving in near-perfect lockstep.
            std::uint32_t h = static_cast<std::uint32_t>(uid * 2654435761u) ^
                              static_cast<std::uint32_t>((block * items_per_cluster + idx) *
                                                         2246822519u);
            h ^= h >> 13;
            h *= 2654435761u;
            h ^= h >> 16;
            double rating = match ? 3.5 + static_cast<double>(h % 4) * 0.5
                                  : 1.0 + static_cast<double>(h % 4) * 0.5;
            Timestamp t = start + static_cast<Timestamp>(k * users + uid) * step;
            events.push_back({u, item, rating, t});
        }
    }
    return events;
}

// Appends a lockstep ring: `size` users with identical item/rating/time
// streams.  Pairwise coefficients are exactly 1 wherever computable.
inline void inject_ring(std::vector<RatingEvent>& events, UserId first_id, std::size_t size,
                        std::size_t n_items, Timestamp start, Timestamp step,
                        ItemId item_base = 100000) {
    for (std::size_t j = 0; j < n_items; ++j) {
        double rating = 0.5 + static_cast<double>(j % 10) * 0.5;
        Timestamp t = start + static_cast<Timestamp>(j) * step;
        for (std::size_t m = 0; m < size; ++m)
            events.push_back({first_id + static_cast<UserId>(m),
                              item_base + static_cast<ItemId>(j), rating, t});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const RatingEvent& a, const RatingEvent& b) {
                         return a.timestamp < b.timestamp;
                     });
}

// MovieLens-small-shaped synthetic log: ~610 users, ~9000 items, ~100k
// ratings across a 1996..2018 span, genre affinities drifting as a random
// walk so pair similarities genuinely decay.  Fully seeded.
inline std::vector<RatingEvent> make_movielens_like(std::uint32_t seed = 0x5eed2026u) {
    std::mt19937 rng(seed);
    const std::size_t n_users = 610;
    const double n_items = 9000.0;
    const int n_genres = 18;
    const double t0 = 840.0e6;
    const double t_end = 1.54e9;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<RatingEvent> events;
    events.reserve(125000);
    for (std::size_t u = 1; u <= n_users; ++u) {
        double join = t0 + u01(rng) * (t_end - t0) * 0.8;
        double span = (0.3 + 1.7 * u01(rng)) * 1.0e8;
        if (join + span > t_end) span = t_end - join;
        std::size_t count = 20 + static_cast<std::size_t>(700.0 * std::pow(u01(rng), 3.0));

        std::vector<double> affinity(n_genres);
        for (auto& a : affinity) a = 0.9 * gauss(rng);
        std::vector<double> times(count);
        for (auto& t : times) t = join + u01(rng) * span;
        std::sort(times.begin(), times.end());

        for (std::size_t k = 0; k < count; ++k) {
            for (auto& a : affinity) a += 0.08 * gauss(rng);
            auto item = static_cast<ItemId>(1.0 + (n_items - 1.0) * std::pow(u01(rng), 2.4));
            int g = static_cast<int>(item % n_genres);
            double r = 3.4 + 0.7 * affinity[g] + 0.5 * gauss(rng);
            events.push_back({static_cast<UserId>(u), item, to_half_star(r),
                              static_cast<Timestamp>(times[k])});
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const RatingEvent& a, const RatingEvent& b) {
                         return a.timestamp < b.timestamp;
                     });
    return events;
}

}  // namespace simdecay::testing
