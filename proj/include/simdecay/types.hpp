#pragma once

// Core domain types shared by every simdecay component: identifiers,
// rating events, user pairs, similarity edges and the error hierarchy.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace simdecay {

using UserId = std::int64_t;
using ItemId = std::int64_t;
using Timestamp = std::int64_t;   // seconds since Unix epoch
using DurationSec = double;       // seconds, may be fractional

// ---------------------------------------------------------------------------
// Errors.  The CLI maps these onto exit codes: input problems -> 2,
// insufficient data -> 3, infeasible parameters -> 4.

class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

class domain_error : public error {
public:
    explicit domain_error(const std::string& msg) : error(msg) {}
};

class not_found_error : public error {
public:
    explicit not_found_error(const std::string& msg) : error(msg) {}
};

class parse_error : public error {
public:
    parse_error(const std::string& msg, std::size_t line)
        : error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

class input_error : public error {
public:
    explicit input_error(const std::string& msg) : error(msg) {}
};

class insufficient_data_error : public error {
public:
    explicit insufficient_data_error(const std::string& msg) : error(msg) {}
};

class infeasible_error : public error {
public:
    explicit infeasible_error(const std::string& msg) : error(msg) {}
};

class inconsistency_error : public error {
public:
    explicit inconsistency_error(const std::string& msg) : error(msg) {}
};

// ---------------------------------------------------------------------------
// Ratings are half-star values 0.5, 1.0, ..., 5.0.

inline bool is_half_star(double rating) {
    if (!(rating >= 0.5 && rating <= 5.0)) return false;
    double twice = rating * 2.0;
    return twice == std::floor(twice);
}

// One timestamped (user, item, rating) action; the atomic input record.
struct RatingEvent {
    UserId user_id = 0;
    ItemId item_id = 0;
    double rating = 0.0;
    Timestamp timestamp = 0;

    bool operator==(const RatingEvent&) const = default;
};

inline void validate_event(const RatingEvent& ev) {
    if (!is_half_star(ev.rating))
        throw domain_error("rating " + std::to_string(ev.rating) +
                           " is not a half-star value");
    if (ev.timestamp < 0)
        throw domain_error("negative timestamp");
}

// Unordered user pair, canonicalized so (a,b) == (b,a).
struct UserPair {
    UserId a = 0;
    UserId b = 0;

    UserPair() = default;
    UserPair(UserId x, UserId y) : a(x < y ? x : y), b(x < y ? y : x) {
        if (x == y) throw domain_error("user pair requires two distinct users");
    }

    bool operator==(const UserPair&) const = default;
    auto operator<=>(const UserPair&) const = default;

    bool contains(UserId u) const { return u == a || u == b; }
    UserId other(UserId u) const { return u == a ? b : a; }
};

// Similarity edge with its recompute-scheduling metadata.
struct SimilarityEdge {
    UserPair pair;
    double coefficient = 0.0;                       // in [-1, 1]
    std::optional<DurationSec> recount_period;      // absent during cold-start
    DurationSec average_rp = 0.0;                   // population fallback, > 0
    Timestamp last_recount_time = 0;

    bool operator==(const SimilarityEdge&) const = default;
};

}  // namespace simdecay
