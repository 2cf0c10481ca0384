// simdecay command-line pipeline: ingest -> stability -> fit -> schedule,
// plus the replay simulator and bot-ring detector.  Every command prints a
// key,value summary block and writes its artifacts into --out_dir; output is
// byte-identical across reruns of the same inputs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simdecay/simdecay.hpp"

namespace sd = simdecay;
namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sd::io_error("cannot open " + path + " for reading");
    return in;
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw sd::io_error("cannot create output directory " + dir);
    fs::path p = fs::path(dir) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw sd::io_error("cannot open " + p.string() + " for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::string& name) {
    out.flush();
    if (!out) throw sd::io_error("write failure on " + name);
}

std::string opt_cell(const std::optional<double>& v) {
    return v ? sd::format_sig6(*v) : std::string();
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::string store_path;
    bool strict = false;
};

int cmd_ingest(const IngestArgs& a) {
    auto in = open_input(a.input);
    auto parsed = sd::parse_ratings(in, a.strict);
    sd::GraphStore store;
    for (const auto& ev : parsed.events) store.upsert_rating(ev);
    store.save(a.store_path);
    std::cout << "accepted," << parsed.report.accepted << '\n'
              << "rejected," << parsed.report.rejected << '\n'
              << "first_timestamp," << parsed.report.first_timestamp << '\n'
              << "last_timestamp," << parsed.report.last_timestamp << '\n'
              << "users," << store.users().size() << '\n'
              << "items," << store.items().size() << '\n'
              << "store," << a.store_path << '\n';
    return 0;
}

struct StabilityArgs {
    std::string store_path;
    std::string out_dir = ".";
    sd::AnalysisOptions opts;
    std::size_t table_limit = 0;
};

int cmd_stability(const StabilityArgs& a) {
    auto store = sd::GraphStore::load(a.store_path);
    auto analysis = sd::analyze_stability(store, a.opts);

    {
        auto out = open_output(a.out_dir, "table1.csv");
        sd::write_table_csv(out, store, analysis.selected_pairs, analysis.grid,
                            a.opts.similarity, a.table_limit);
        finish_output(out, "table1.csv");
    }
    {
        auto out = open_output(a.out_dir, "histogram.csv");
        sd::write_histogram_csv(out, analysis.hist);
        finish_output(out, "histogram.csv");
    }
    {
        auto out = open_output(a.out_dir, "histogram_smoothed.csv");
        sd::write_smoothed_csv(out, analysis.smoothed);
        finish_output(out, "histogram_smoothed.csv");
    }
    {
        auto out = open_output(a.out_dir, "survival.csv");
        sd::write_survival_csv(out, analysis.survival);
        finish_output(out, "survival.csv");
    }

    std::cout << "grid_start," << analysis.grid.start << '\n'
              << "grid_buckets," << analysis.grid.bucket_count << '\n'
              << "bucket_len," << a.opts.bucket_len << '\n'
              << "sensitivity_d," << sd::format_sig6(a.opts.sensitivity_d) << '\n'
              << "pairs_selected," << analysis.selected_pairs.size() << '\n'
              << "intervals," << analysis.hist.total_intervals << '\n'
              << "histogram_bins," << analysis.hist.counts.size() << '\n'
              << "survival_rows," << analysis.survival.values.size() << '\n';
    return 0;
}

struct FitArgs {
    std::string input;
    std::string out_dir = ".";
    std::size_t window = 1;
};

std::vector<sd::FitPoint> read_points(std::istream& in) {
    std::vector<sd::FitPoint> points;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto sv = sd::trim(line);
        if (sv.empty()) continue;
        auto fields = sd::split_fields(sv);
        if (fields.size() < 2)
            throw sd::parse_error("fit input needs two columns", lineno);
        double t = 0.0, n = 0.0;
        if (!sd::parse_double(sd::trim(fields[0]), t) ||
            !sd::parse_double(sd::trim(fields[1]), n)) {
            if (lineno == 1) continue;  // header row
            throw sd::parse_error("malformed fit point", lineno);
        }
        points.emplace_back(t, n);
    }
    return points;
}

std::vector<sd::FitPoint> smooth_points(const std::vector<sd::FitPoint>& pts,
                                        std::size_t window) {
    if (window <= 1) return pts;
    if (window % 2 == 0) throw sd::input_error("smoothing window must be odd");
    std::vector<sd::FitPoint> out;
    out.reserve(pts.size());
    std::size_t half = window / 2;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::size_t lo = i >= half ? i - half : 0;
        std::size_t hi = std::min(pts.size() - 1, i + half);
        double sum = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) sum += pts[j].second;
        out.emplace_back(pts[i].first, sum / static_cast<double>(hi - lo + 1));
    }
    return out;
}

int cmd_fit(const FitArgs& a) {
    auto in = open_input(a.input);
    auto points = smooth_points(read_points(in), a.window);

    sd::DecayModel exp_model = sd::fit_exponential(points);
    std::optional<sd::ParetoModel> pareto_model;
    std::string pareto_error;
    try {
        pareto_model = sd::fit_pareto(points);
    } catch (const sd::insufficient_data_error& e) {
        pareto_error = e.what();
    }

    std::cout << "model,exponential\n"
              << "n0," << sd::format_sig6(exp_model.n0) << '\n'
              << "lambda," << sd::format_sig6(exp_model.lambda) << '\n';
    if (exp_model.lambda > 0.0) {
        std::cout << "tau," << sd::format_sig6(sd::mean_lifetime(exp_model)) << '\n'
                  << "half_life," << sd::format_sig6(sd::half_life(exp_model)) << '\n';
    }
    std::cout << "residual_std," << sd::format_sig6(exp_model.residual_std) << '\n'
              << "log_residual_std," << sd::format_sig6(exp_model.log_residual_std) << '\n'
              << "points_used," << exp_model.points_used << '\n'
              << "points_excluded," << exp_model.points_excluded << '\n';
    if (pareto_model) {
        std::cout << "model,pareto\n"
                  << "c," << sd::format_sig6(pareto_model->c) << '\n'
                  << "alpha," << sd::format_sig6(pareto_model->alpha) << '\n'
                  << "residual_std," << sd::format_sig6(pareto_model->residual_std) << '\n'
                  << "log_residual_std," << sd::format_sig6(pareto_model->log_residual_std)
                  << '\n'
                  << "points_used," << pareto_model->points_used << '\n'
                  << "points_excluded," << pareto_model->points_excluded << '\n';
        std::cout << "preferred,"
                  << (exp_model.residual_std <= pareto_model->residual_std ? "exponential"
                                                                           : "pareto")
                  << '\n';
    } else {
        std::cout << "pareto_error," << pareto_error << '\n'
                  << "preferred,exponential\n";
    }

    auto out = open_output(a.out_dir, "fit.csv");
    out << "model,scale,rate,residual_std,log_residual_std,points_used,points_excluded\n";
    out << "exponential," << sd::format_sig6(exp_model.n0) << ','
        << sd::format_sig6(exp_model.lambda) << ',' << sd::format_sig6(exp_model.residual_std)
        << ',' << sd::format_sig6(exp_model.log_residual_std) << ',' << exp_model.points_used
        << ',' << exp_model.points_excluded << '\n';
    if (pareto_model) {
        out << "pareto," << sd::format_sig6(pareto_model->c) << ','
            << sd::format_sig6(pareto_model->alpha) << ','
            << sd::format_sig6(pareto_model->residual_std) << ','
            << sd::format_sig6(pareto_model->log_residual_std) << ','
            << pareto_model->points_used << ',' << pareto_model->points_excluded << '\n';
    }
    finish_output(out, "fit.csv");
    return 0;
}

struct ScheduleArgs {
    std::string store_path;
    double lambda = 0.0;
    sd::ServiceParams service;
    double p_st = 0.36787944117144233;
    sd::Timestamp bucket_len = 1'000'000;
    bool per_user = false;
    sd::AnalysisOptions analysis;
    sd::RateOptions rates;
};

int cmd_schedule(const ScheduleArgs& a) {
    auto store = sd::GraphStore::load(a.store_path);
    auto solution = sd::optimize(a.service, a.lambda);
    double average_rp = sd::stable_horizon(a.lambda, a.p_st) *
                        static_cast<double>(a.bucket_len);

    if (store.similarities().empty() && store.rating_count() > 0)
        sd::refresh_edges(store, store.max_timestamp(), a.analysis.similarity, average_rp);

    std::map<sd::UserId, double> per_user_lambdas;
    std::size_t personal_fits = 0;
    std::size_t group_fits = 0;
    if (a.per_user) {
        auto analysis = sd::analyze_stability(store, a.analysis);
        auto rates = sd::fit_user_rates(analysis, store, a.rates);
        per_user_lambdas = rates.lambda_by_user;
        personal_fits = rates.personal.size();
        for (const auto& g : rates.groups) group_fits += g.model ? 1 : 0;
    }
    sd::assign_periods(store, a.lambda, per_user_lambdas, a.p_st, a.bucket_len);
    store.save(a.store_path);

    std::size_t with_personal = 0;
    for (const auto& [pair, edge] : store.similarities())
        with_personal += edge.recount_period ? 1 : 0;

    std::cout << "lambda," << sd::format_sig6(a.lambda) << '\n'
              << "t_cr," << sd::format_sig6(solution.t_cr) << '\n'
              << "mean_service_time," << sd::format_sig6(solution.mean_service_time) << '\n'
              << "load_coefficient," << sd::format_sig6(solution.load_coefficient) << '\n'
              << "bucket_len," << a.bucket_len << '\n'
              << "t_cr_seconds,"
              << sd::format_sig6(solution.t_cr * static_cast<double>(a.bucket_len)) << '\n'
              << "p_st," << sd::format_sig6(a.p_st) << '\n'
              << "average_rp_seconds," << sd::format_sig6(average_rp) << '\n'
              << "edges," << store.similarities().size() << '\n'
              << "edges_with_personal_period," << with_personal << '\n'
              << "personal_rates," << personal_fits << '\n'
              << "group_rates," << group_fits << '\n';
    return 0;
}

struct SimulateArgs {
    std::string input;
    std::string out_dir = ".";
    std::string policy = "adaptive";
    sd::ReplayConfig cfg;
    sd::ServiceParams service;
    sd::Timestamp split_time = 0;
    bool has_split = false;
};

int cmd_simulate(SimulateArgs a) {
    auto in = open_input(a.input);
    auto parsed = sd::parse_ratings(in, false);
    auto events = parsed.events;
    std::stable_sort(events.begin(), events.end(),
                     [](const sd::RatingEvent& x, const sd::RatingEvent& y) {
                         return x.timestamp < y.timestamp;
                     });

    a.cfg.policy = sd::parse_policy(a.policy);
    if (a.has_split) a.cfg.split_time = a.split_time;
    auto metrics = sd::replay(events, a.cfg, a.service);

    {
        auto out = open_output(a.out_dir, "replay.csv");
        sd::write_replay_csv(out, metrics.checkpoints, sd::to_string(a.cfg.policy));
        finish_output(out, "replay.csv");
    }

    std::cout << "policy," << sd::to_string(a.cfg.policy) << '\n'
              << "served_requests," << metrics.served_requests << '\n'
              << "recompute_count," << metrics.recompute_count << '\n'
              << "simulated_mean_service_time,"
              << sd::format_sig6(metrics.simulated_mean_service_time) << '\n'
              << "n_fr_fraction," << sd::format_sig6(metrics.n_fr_fraction) << '\n'
              << "n_ir_fraction," << sd::format_sig6(metrics.n_ir_fraction) << '\n'
              << "precision_at_n," << opt_cell(metrics.precision_at_n) << '\n'
              << "recall_at_n," << opt_cell(metrics.recall_at_n) << '\n'
              << "evaluated_users," << metrics.evaluated_users << '\n';
    return 0;
}

struct DetectBotsArgs {
    std::string store_path;
    std::string out_dir = ".";
    sd::Timestamp bucket_len = 1'000'000;
    sd::BotDetectionOptions opts;
};

int cmd_detect_bots(const DetectBotsArgs& a) {
    auto store = sd::GraphStore::load(a.store_path);
    auto grid = sd::make_grid(store, a.bucket_len);
    auto rings = sd::detect_bot_rings(store, grid, a.opts);

    auto out = open_output(a.out_dir, "rings.csv");
    out << "members,min_pairwise_k,stable_duration\n";
    for (const auto& ring : rings) {
        std::string members;
        for (sd::UserId u : ring.members) {
            if (!members.empty()) members += '|';
            members += std::to_string(u);
        }
        out << members << ',' << sd::format_sig6(ring.min_pairwise_k) << ','
            << sd::format_sig6(ring.stable_duration) << '\n';
    }
    finish_output(out, "rings.csv");

    std::cout << "rings," << rings.size() << '\n';
    for (const auto& ring : rings) {
        std::cout << "ring,";
        for (std::size_t i = 0; i < ring.members.size(); ++i)
            std::cout << (i ? "|" : "") << ring.members[i];
        std::cout << ',' << sd::format_sig6(ring.min_pairwise_k) << ','
                  << sd::format_sig6(ring.stable_duration) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"similarity decay analysis toolchain"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "parse a ratings CSV into a store file");
    c_ingest->add_option("--input", ingest.input, "ratings CSV (userId,movieId,rating,timestamp)")
        ->required();
    c_ingest->add_option("--store", ingest.store_path, "store file to write")->required();
    c_ingest->add_flag("--strict", ingest.strict, "reject the whole file on any bad row");

    StabilityArgs stability;
    auto* c_stab = app.add_subcommand("stability",
                                      "per-pair series, stability intervals, histogram, survival");
    c_stab->add_option("--store", stability.store_path, "store file")->required();
    c_stab->add_option("--out_dir", stability.out_dir, "artifact directory")
        ->envname("SIMDECAY_OUT_DIR");
    c_stab->add_option("--bucket_len", stability.opts.bucket_len, "bucket length, seconds");
    c_stab->add_option("--d", stability.opts.sensitivity_d, "sensitivity threshold");
    c_stab->add_option("--window", stability.opts.smoothing_window, "moving-average window");
    c_stab->add_option("--min_overlap", stability.opts.similarity.min_overlap,
                       "minimum co-rated items per pair");
    c_stab->add_option("--min_active_buckets", stability.opts.min_active_buckets,
                       "joint-activity span required per pair");
    c_stab->add_option("--table_limit", stability.table_limit,
                       "cap on Table 1 rows (0 = all)");
    c_stab->set_config("--config");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "fit exponential and Pareto decay to (t,N) points");
    c_fit->add_option("--input", fit.input, "two-column CSV of points")->required();
    c_fit->add_option("--out_dir", fit.out_dir, "artifact directory")
        ->envname("SIMDECAY_OUT_DIR");
    c_fit->add_option("--window", fit.window, "extra moving-average window (odd, 1 = none)");
    c_fit->set_config("--config");

    ScheduleArgs schedule;
    auto* c_sched = app.add_subcommand("schedule",
                                       "optimize the recompute schedule and assign periods");
    c_sched->add_option("--store", schedule.store_path, "store file (updated in place)")
        ->required();
    c_sched->add_option("--lambda", schedule.lambda, "decay rate per bucket")->required();
    c_sched->add_option("--t_fr", schedule.service.t_fr, "full recompute service time");
    c_sched->add_option("--t_ir", schedule.service.t_ir, "cached service time");
    c_sched->add_option("--p_b", schedule.service.p_b, "base error");
    c_sched->add_option("--n_cr", schedule.service.n_cr, "error budget");
    c_sched->add_option("--tau_visit", schedule.service.tau_visit, "mean inter-visit time");
    c_sched->add_option("--p_st", schedule.p_st, "stability level for periods");
    c_sched->add_option("--bucket_len", schedule.bucket_len, "seconds per bucket unit");
    c_sched->add_flag("--per_user", schedule.per_user,
                      "fit per-user/group rates from the store's own log");
    c_sched->add_option("--d", schedule.analysis.sensitivity_d, "sensitivity threshold");
    c_sched->add_option("--min_overlap", schedule.analysis.similarity.min_overlap,
                        "minimum co-rated items per pair");
    c_sched->add_option("--min_intervals", schedule.rates.min_intervals,
                        "intervals required for a personal rate");
    c_sched->add_option("--groups", schedule.rates.group_count, "activity groups");
    c_sched->set_config("--config");

    SimulateArgs simulate;
    auto* c_sim = app.add_subcommand("simulate", "replay a rating log under a policy");
    c_sim->add_option("--input", simulate.input, "ratings CSV")->required();
    c_sim->add_option("--out_dir", simulate.out_dir, "artifact directory")
        ->envname("SIMDECAY_OUT_DIR");
    c_sim->add_option("--policy", simulate.policy, "always | periodic | adaptive");
    c_sim->add_option("--delta", simulate.cfg.periodic_delta,
                      "recompute period for the periodic policy, seconds");
    c_sim->add_option("--lambda", simulate.cfg.lambda, "population decay rate per bucket");
    c_sim->add_option("--p_st", simulate.cfg.p_st, "stability level for adaptive periods");
    c_sim->add_option("--bucket_len", simulate.cfg.bucket_len, "seconds per bucket unit");
    auto* split_opt =
        c_sim->add_option("--split_time", simulate.split_time, "train/test split timestamp");
    c_sim->add_option("--top_n", simulate.cfg.top_n, "recommendation list length");
    c_sim->add_option("--threshold", simulate.cfg.relevance_threshold, "relevance threshold");
    c_sim->add_option("--d", simulate.cfg.sensitivity_d, "ground-truth movement threshold");
    c_sim->add_option("--min_overlap", simulate.cfg.similarity.min_overlap,
                      "minimum co-rated items per pair");
    c_sim->add_option("--k_neighbors", simulate.cfg.predict.k_neighbors, "prediction neighbors");
    c_sim->add_option("--t_fr", simulate.service.t_fr, "full recompute service time");
    c_sim->add_option("--t_ir", simulate.service.t_ir, "cached service time");
    c_sim->add_option("--p_b", simulate.service.p_b, "base error");
    c_sim->add_option("--n_cr", simulate.service.n_cr, "error budget");
    c_sim->add_option("--tau_visit", simulate.service.tau_visit, "mean inter-visit time");
    c_sim->set_config("--config");

    DetectBotsArgs bots;
    auto* c_bots = app.add_subcommand("detect-bots", "find lockstep user rings");
    c_bots->add_option("--store", bots.store_path, "store file")->required();
    c_bots->add_option("--out_dir", bots.out_dir, "artifact directory")
        ->envname("SIMDECAY_OUT_DIR");
    c_bots->add_option("--epsilon", bots.opts.epsilon, "lockstep band width");
    c_bots->add_option("--min_duration", bots.opts.min_duration, "qualifying run, buckets");
    c_bots->add_option("--min_size", bots.opts.min_size, "smallest ring reported");
    c_bots->add_option("--bucket_len", bots.bucket_len, "bucket length, seconds");
    c_bots->add_option("--min_overlap", bots.opts.similarity.min_overlap,
                       "minimum co-rated items per pair");
    c_bots->set_config("--config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (c_ingest->parsed()) return cmd_ingest(ingest);
    if (c_stab->parsed()) return cmd_stability(stability);
    if (c_fit->parsed()) return cmd_fit(fit);
    if (c_sched->parsed()) return cmd_schedule(schedule);
    if (c_sim->parsed()) {
        simulate.has_split = split_opt->count() > 0;
        return cmd_simulate(simulate);
    }
    if (c_bots->parsed()) return cmd_detect_bots(bots);
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sd::insufficient_data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const sd::infeasible_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
