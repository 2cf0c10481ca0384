#pragma once

// MovieLens-format rating log parsing: userId,movieId,rating,timestamp.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "simdecay/format.hpp"
#include "simdecay/types.hpp"

namespace simdecay {

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    Timestamp first_timestamp = 0;  // min over accepted events
    Timestamp last_timestamp = 0;   // max over accepted events
};

struct ParseResult {
    std::vector<RatingEvent> events;  // in file order
    IngestReport report;
};

namespace detail {

inline bool parse_rating_line(std::string_view line, RatingEvent& ev, std::string& why) {
    auto fields = split_fields(line);
    if (fields.size() != 4) {
        why = "expected 4 fields, got " + std::to_string(fields.size());
        return false;
    }
    double rating;
    if (!parse_int64(fields[0], ev.user_id)) { why = "bad userId"; return false; }
    if (!parse_int64(fields[1], ev.item_id)) { why = "bad movieId"; return false; }
    if (!parse_double(fields[2], rating)) { why = "bad rating"; return false; }
    if (!parse_int64(fields[3], ev.timestamp)) { why = "bad timestamp"; return false; }
    if (!is_half_star(rating)) { why = "rating is not a half-star value"; return false; }
    if (ev.timestamp < 0) { why = "negative timestamp"; return false; }
    ev.rating = rating;
    return true;
}

inline bool looks_like_header(std::string_view line) {
    auto fields = split_fields(line);
    if (fields.empty()) return false;
    std::int64_t v;
    return !parse_int64(fields[0], v);
}

}  // namespace detail

// Parses a ratings CSV stream.  An optional header line is auto-detected
// (first field non-numeric).  In strict mode any malformed line aborts with
// its position; in lenient mode malformed lines are counted and skipped.
inline ParseResult parse_ratings(std::istream& in, bool strict = false) {
    ParseResult result;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = trim(line);
        if (first) {
            first = false;
            if (detail::looks_like_header(sv)) continue;
        }
        if (sv.empty()) continue;
        RatingEvent ev;
        std::string why;
        if (detail::parse_rating_line(sv, ev, why)) {
            if (result.report.accepted == 0) {
                result.report.first_timestamp = ev.timestamp;
                result.report.last_timestamp = ev.timestamp;
            } else {
                result.report.first_timestamp = std::min(result.report.first_timestamp, ev.timestamp);
                result.report.last_timestamp = std::max(result.report.last_timestamp, ev.timestamp);
            }
            ++result.report.accepted;
            result.events.push_back(ev);
        } else {
            if (strict) throw parse_error(why, lineno);
            ++result.report.rejected;
        }
    }
    return result;
}

// Canonical serialization; re-parsing the output yields identical events.
inline void write_ratings_csv(const std::vector<RatingEvent>& events, std::ostream& out) {
    out << "userId,movieId,rating,timestamp\n";
    for (const auto& ev : events) {
        out << ev.user_id << ',' << ev.item_id << ','
            << format_rating(ev.rating) << ',' << ev.timestamp << '\n';
    }
}

}  // namespace simdecay
