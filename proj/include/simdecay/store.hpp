#pragma once

// In-memory bipartite graph of users, items, rating edges and similarity
// edges, with plain-text file persistence.
//
// Concurrency: single-writer, multi-reader.  Mutating calls must be
// serialized by the caller; a const GraphStore acts as an immutable
// snapshot and is safe to read from parallel workers.

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "simdecay/format.hpp"
#include "simdecay/types.hpp"

namespace simdecay {

struct RatingRecord {
    ItemId item_id = 0;
    double rating = 0.0;
    Timestamp timestamp = 0;

    bool operator==(const RatingRecord&) const = default;
};

class GraphStore {
public:
    // Inserts a rating edge, creating user/item nodes as needed.  Per-user
    // lists stay sorted by (timestamp, item); re-ratings are retained.
    void upsert_rating(const RatingEvent& ev) {
        validate_event(ev);
        users_.insert(ev.user_id);
        items_.insert(ev.item_id);
        auto& list = ratings_[ev.user_id];
        RatingRecord rec{ev.item_id, ev.rating, ev.timestamp};
        auto pos = std::upper_bound(list.begin(), list.end(), rec,
                                    [](const RatingRecord& x, const RatingRecord& y) {
                                        if (x.timestamp != y.timestamp)
                                            return x.timestamp < y.timestamp;
                                        return x.item_id < y.item_id;
                                    });
        list.insert(pos, rec);
    }

    // Latest rating per item at time <= t.  Later records overwrite earlier
    // ones, so a re-rating supersedes within the window.
    std::map<ItemId, double> ratings_asof(UserId user, Timestamp t) const {
        auto it = ratings_.find(user);
        if (it == ratings_.end()) {
            if (!users_.count(user))
                throw not_found_error("unknown user " + std::to_string(user));
            return {};
        }
        std::map<ItemId, double> out;
        for (const auto& rec : it->second) {
            if (rec.timestamp > t) break;
            out[rec.item_id] = rec.rating;
        }
        return out;
    }

    std::optional<SimilarityEdge> get_edge(const UserPair& pair) const {
        auto it = similarities_.find(pair);
        if (it == similarities_.end()) return std::nullopt;
        return it->second;
    }

    void put_edge(const SimilarityEdge& edge) {
        similarities_[edge.pair] = edge;
    }

    void erase_edge(const UserPair& pair) { similarities_.erase(pair); }

    bool has_user(UserId u) const { return users_.count(u) != 0; }

    const std::set<UserId>& users() const { return users_; }
    const std::set<ItemId>& items() const { return items_; }
    const std::map<UserPair, SimilarityEdge>& similarities() const { return similarities_; }
    std::map<UserPair, SimilarityEdge>& similarities() { return similarities_; }

    const std::vector<RatingRecord>& user_ratings(UserId u) const {
        static const std::vector<RatingRecord> empty;
        auto it = ratings_.find(u);
        return it == ratings_.end() ? empty : it->second;
    }

    std::size_t rating_count() const {
        std::size_t n = 0;
        for (const auto& [u, list] : ratings_) n += list.size();
        return n;
    }

    Timestamp min_timestamp() const {
        Timestamp t = std::numeric_limits<Timestamp>::max();
        for (const auto& [u, list] : ratings_)
            if (!list.empty()) t = std::min(t, list.front().timestamp);
        return t == std::numeric_limits<Timestamp>::max() ? 0 : t;
    }

    Timestamp max_timestamp() const {
        Timestamp t = 0;
        for (const auto& [u, list] : ratings_)
            if (!list.empty()) t = std::max(t, list.back().timestamp);
        return t;
    }

    // ------------------------------------------------------------------
    // Persistence.  Line-oriented UTF-8:
    //   R,user,item,rating,timestamp
    //   S,userA,userB,coefficient,recount_period|∅,average_rp,last_recount_time
    // Ratings are emitted users-ascending then timestamp order; similarity
    // edges follow in pair order.

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw io_error("cannot open " + path + " for writing");
        write(out);
        out.flush();
        if (!out) throw io_error("write failure on " + path);
    }

    void write(std::ostream& out) const {
        for (const auto& [user, list] : ratings_) {
            for (const auto& rec : list) {
                out << "R," << user << ',' << rec.item_id << ','
                    << format_rating(rec.rating) << ',' << rec.timestamp << '\n';
            }
        }
        for (const auto& [pair, edge] : similarities_) {
            out << "S," << pair.a << ',' << pair.b << ','
                << format_double_exact(edge.coefficient) << ',';
            if (edge.recount_period)
                out << format_double_exact(*edge.recount_period);
            else
                out << "∅";
            out << ',' << format_double_exact(edge.average_rp) << ','
                << edge.last_recount_time << '\n';
        }
    }

    static GraphStore load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open " + path + " for reading");
        return read(in);
    }

    static GraphStore read(std::istream& in) {
        GraphStore store;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string_view sv = trim(line);
            if (sv.empty()) continue;
            auto fields = split_fields(sv);
            if (fields[0] == "R") {
                if (fields.size() != 5)
                    throw parse_error("rating record needs 5 fields", lineno);
                RatingEvent ev;
                double rating;
                if (!parse_int64(fields[1], ev.user_id) ||
                    !parse_int64(fields[2], ev.item_id) ||
                    !parse_double(fields[3], rating) ||
                    !parse_int64(fields[4], ev.timestamp))
                    throw parse_error("malformed rating record", lineno);
                ev.rating = rating;
                try {
                    store.upsert_rating(ev);
                } catch (const domain_error& e) {
                    throw parse_error(e.what(), lineno);
                }
            } else if (fields[0] == "S") {
                if (fields.size() != 7)
                    throw parse_error("similarity record needs 7 fields", lineno);
                SimilarityEdge edge;
                UserId a, b;
                Timestamp last;
                double coeff, avg;
                if (!parse_int64(fields[1], a) || !parse_int64(fields[2], b) ||
                    !parse_double(fields[3], coeff) ||
                    !parse_double(fields[5], avg) ||
                    !parse_int64(fields[6], last))
                    throw parse_error("malformed similarity record", lineno);
                if (a == b)
                    throw parse_error("similarity record with identical users", lineno);
                edge.pair = UserPair(a, b);
                edge.coefficient = coeff;
                edge.average_rp = avg;
                edge.last_recount_time = last;
                std::string_view rp = trim(fields[4]);
                if (rp != "∅") {
                    double period;
                    if (!parse_double(rp, period))
                        throw parse_error("malformed recount_period", lineno);
                    edge.recount_period = period;
                }
                store.put_edge(edge);
            } else {
                throw parse_error("unknown record type '" + std::string(fields[0]) + "'", lineno);
            }
        }
        return store;
    }

private:
    std::set<UserId> users_;
    std::set<ItemId> items_;
    std::map<UserId, std::vector<RatingRecord>> ratings_;
    std::map<UserPair, SimilarityEdge> similarities_;
};

}  // namespace simdecay
