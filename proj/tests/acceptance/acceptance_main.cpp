// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Library-level checks use the public headers; the last criterion
// drives the installed CLI binary (path in $SIMDECAY_CLI).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "simdecay/simdecay.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace simdecay;
using namespace simdecay::testing;
namespace fs = std::filesystem;

namespace {

struct check_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw check_failure(msg);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Similarity equivalence

std::string criterion_similarity() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(2026);
    std::uniform_int_distribution<int> len(3, 50);
    std::uniform_int_distribution<int> star(1, 10);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = static_cast<std::size_t>(len(rng));
        PairVectors pv;
        for (std::size_t i = 0; i < n; ++i) {
            pv.co_items.push_back(static_cast<ItemId>(i + 1));
            pv.r1.push_back(0.5 * star(rng));
            pv.r2.push_back(0.5 * star(rng));
        }
        auto slow = pearson_definitional(pv);
        auto fast = pearson_fast(accumulate(pv));
        require(slow.has_value() == fast.has_value(), "form definedness diverged");
        if (slow) worst = std::max(worst, std::abs(*slow - *fast));
    }
    double dt = seconds_since(t0);
    require(worst <= 1e-12, "max |Eq.2 - Eq.1| = " + fmt(worst));
    require(dt < 1.0, "runtime " + fmt(dt) + "s exceeds 1s");
    return "1000 pairs, max|diff|=" + fmt(worst) + ", " + fmt(dt) + "s";
}

// ---------------------------------------------------------------------------
// 2. Regression exactness

std::string criterion_regression() {
    // noiseless recovery
    const double lambda = 0.046, n0 = 366.72;
    std::vector<FitPoint> pts;
    for (int t = 0; t < 50; ++t)
        pts.emplace_back(static_cast<double>(t), n0 * std::exp(-lambda * t));
    auto m = fit_exponential(pts);
    require(std::abs(m.lambda - lambda) <= 1e-9, "noiseless lambda off");
    require(std::abs(m.n0 - n0) / n0 <= 1e-9, "noiseless n0 off");

    // noisy recovery: 100 seeds, sigma_log = 0.05, 50 points
    int good = 0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937 rng(7000 + seed);
        std::normal_distribution<double> noise(0.0, 0.05);
        std::vector<FitPoint> noisy;
        for (int t = 0; t < 50; ++t)
            noisy.emplace_back(static_cast<double>(t),
                               n0 * std::exp(-lambda * t + noise(rng)));
        auto fit = fit_exponential(noisy);
        if (std::abs(fit.lambda - lambda) / lambda <= 0.05 &&
            std::abs(fit.n0 - n0) / n0 <= 0.05)
            ++good;
    }
    require(good >= 95, "only " + std::to_string(good) + "/100 noisy seeds within 5%");

    // OLS equals the brute-force minimizer of the log-space SSE
    for (int seed = 0; seed < 5; ++seed) {
        std::mt19937 rng(9100 + seed);
        std::normal_distribution<double> noise(0.0, 0.3);
        std::vector<FitPoint> noisy;
        for (int t = 1; t <= 20; ++t)
            noisy.emplace_back(static_cast<double>(t),
                               50.0 * std::exp(-0.2 * t + noise(rng)));
        auto fit = fit_exponential(noisy);
        auto [gl, gn0] = oracle_loglinear_grid(noisy);
        require(std::abs(fit.lambda - gl) <= 1e-6, "ols vs grid lambda diverged");
        require(std::abs(std::log(fit.n0) - std::log(gn0)) <= 1e-6,
                "ols vs grid intercept diverged");
    }
    return "noiseless 1e-9, noisy " + std::to_string(good) + "/100, grid match 1e-6";
}

// ---------------------------------------------------------------------------
// 3. Decay identities

std::string criterion_identities() {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double worst = 0.0;
    auto track = [&worst](double err) { worst = std::max(worst, err); };
    for (int trial = 0; trial < 300; ++trial) {
        double lambda = std::pow(10.0, -4.0 + 5.0 * u01(rng));  // 1e-4 .. 10
        track(std::abs(p_change(lambda, half_life(lambda)) - 0.5));
        track(std::abs(q_stable(lambda, mean_lifetime(lambda)) - std::exp(-1.0)));
        double t = 5.0 * mean_lifetime(lambda) * u01(rng);
        track(std::abs(p_change(lambda, t) + q_stable(lambda, t) - 1.0));
        double p_st = 0.01 + 0.98 * u01(rng);
        track(std::abs(q_stable(lambda, stable_horizon(lambda, p_st)) - p_st));
        double q_st = 0.95 * u01(rng);
        track(std::abs(p_change(lambda, change_horizon(lambda, q_st)) - q_st));
    }
    require(worst <= 1e-12, "identity error " + fmt(worst));
    return "300 random lambdas, max err " + fmt(worst);
}

// ---------------------------------------------------------------------------
// 4. Optimization correctness

std::string criterion_optimization() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        ServiceParams p;
        p.t_fr = 0.5 + 1.5 * u01(rng);
        p.t_ir = p.t_fr * (0.01 + 0.49 * u01(rng));
        p.p_b = 0.5 * u01(rng);
        p.n_cr = p.p_b + (1.0 - p.p_b) * (0.05 + 0.8 * u01(rng));
        p.tau_visit = std::pow(10.0, -1.0 + 2.0 * u01(rng));
        double lambda = std::pow(10.0, -3.0 + 3.0 * u01(rng));

        auto sol = optimize(p, lambda);
        require(std::abs(recommendation_error(lambda, p.p_b, sol.t_cr) - p.n_cr) <= 1e-9,
                "round trip through the error curve broke");

        // every feasible staleness has a service time no better than T(t_cr)
        for (int i = 0; i <= 100; ++i) {
            double t = sol.t_cr * static_cast<double>(i) / 100.0;
            require(recommendation_error(lambda, p.p_b, t) <= p.n_cr + 1e-9,
                    "staleness below t_cr must stay in budget");
            require(mean_service_time(p, t) >= sol.mean_service_time - 1e-12,
                    "found a cheaper feasible staleness");
        }
        require(recommendation_error(lambda, p.p_b, sol.t_cr * 1.01) > p.n_cr,
                "beyond t_cr the budget must be violated");
    }

    ServiceParams worked;
    worked.p_b = 0.1;
    worked.n_cr = 0.2;
    auto sol = optimize(worked, 0.046);
    require(std::abs(sol.t_cr - 2.560500775138772) <= 1e-9, "worked t_cr off");
    require(std::abs(sol.load_coefficient - 0.35277343183977317) <= 1e-9,
            "worked load coefficient off");
    double dt = seconds_since(t0);
    require(dt < 1.0, "runtime " + fmt(dt) + "s exceeds 1s");
    return "100 param draws, worked example t_cr=2.5605 K_lc=0.3528, " + fmt(dt) + "s";
}

// ---------------------------------------------------------------------------
// 5. Service-time halving

std::string criterion_halving() {
    auto t0 = std::chrono::steady_clock::now();

    // Eq. arithmetic: t_ir = 0.1 t_fr and t_cr = 10 tau gives T = 2/11 t_fr
    ServiceParams unit;  // t_fr=1, t_ir=0.1, tau=1
    double predicted_unit = mean_service_time(unit, 10.0);
    require(std::abs(predicted_unit - 2.0 / 11.0) <= 1e-15, "Eq. arithmetic off");
    require(predicted_unit <= 0.5, "predicted service time above half");

    // stationary log: 20 users x 200 visits, one visit per 1000 s
    auto events = make_stationary_log(20, 10, 200, 1000, 100);
    require(events.size() <= 5000, "fixture exceeds desk scale");

    ServiceParams service;  // t_fr=1, t_ir=0.1
    ReplayConfig periodic;
    periodic.policy = Policy::periodic;
    periodic.periodic_delta = 10000.0;  // 10 visits of staleness
    periodic.bucket_len = 50000;
    auto measured = replay(events, periodic, service);

    ServiceParams formula;
    formula.tau_visit = 1000.0;
    double predicted = mean_service_time(formula, 10000.0);
    double ratio = measured.simulated_mean_service_time / predicted;
    require(std::abs(ratio - 1.0) <= 0.10,
            "measured/predicted = " + fmt(ratio) + " outside 10%");

    ReplayConfig adaptive;
    adaptive.policy = Policy::adaptive;
    adaptive.lambda = 0.046;
    adaptive.bucket_len = 1000;
    ReplayConfig always;
    always.policy = Policy::always;
    always.bucket_len = 50000;
    auto ma = replay(events, adaptive, service);
    auto mb = replay(events, always, service);
    require(ma.simulated_mean_service_time <= 0.5 * mb.simulated_mean_service_time,
            "adaptive failed to halve the always-policy cost");

    double dt = seconds_since(t0);
    require(dt < 30.0, "runtime " + fmt(dt) + "s exceeds 30s");
    return "measured " + fmt(measured.simulated_mean_service_time) + " vs predicted " +
           fmt(predicted) + " (ratio " + fmt(ratio) + "), adaptive " +
           fmt(ma.simulated_mean_service_time) + " <= 0.5*always, " + fmt(dt) + "s";
}

// ---------------------------------------------------------------------------
// 6. Qualitative experiment reproduction

std::string criterion_reproduction() {
    auto t0 = std::chrono::steady_clock::now();
    auto events = make_movielens_like();
    require(events.size() > 60000, "corpus too small to be MovieLens-shaped");
    auto store = store_from(events);

    AnalysisOptions opts;  // bucket 1e6 s, d = 0.01
    auto analysis = analyze_stability(store, opts);
    require(analysis.hist.total_intervals > 100, "too few completed intervals");

    // declining interval-frequency histogram: first half of the support
    // outweighs the second half, and the smoothed curve fits with lambda > 0
    auto pts = histogram_points(analysis.hist);
    std::size_t half = pts.size() / 2;
    double front = 0.0, back = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        (i < half ? front : back) += pts[i].second;
    require(front > back, "histogram is not declining");

    auto hist_fit = fit_exponential(smoothed_points(analysis.smoothed));
    require(hist_fit.lambda > 0.0, "histogram decay rate not positive");
    auto pareto_fit = fit_pareto(histogram_points(analysis.hist));
    require(std::isfinite(hist_fit.residual_std) && hist_fit.residual_std > 0.0,
            "exponential residual_std not reported");
    require(std::isfinite(pareto_fit.residual_std) && pareto_fit.residual_std > 0.0,
            "pareto residual_std not reported");

    for (std::size_t i = 1; i < analysis.survival.values.size(); ++i)
        require(analysis.survival.values[i] <= analysis.survival.values[i - 1],
                "survival curve increased");
    auto surv_fit = fit_exponential(survival_points(analysis.survival));
    require(surv_fit.lambda > 0.0, "survival decay rate not positive");

    double dt = seconds_since(t0);
    require(dt < 300.0, "runtime " + fmt(dt) + "s exceeds 5min");
    return std::to_string(events.size()) + " events, " +
           std::to_string(analysis.selected_pairs.size()) + " pairs, " +
           std::to_string(analysis.hist.total_intervals) + " intervals, lambda_hist=" +
           fmt(hist_fit.lambda) + " lambda_surv=" + fmt(surv_fit.lambda) + ", S_exp=" +
           fmt(hist_fit.residual_std) + " S_par=" + fmt(pareto_fit.residual_std) + ", " +
           fmt(dt) + "s";
}

// ---------------------------------------------------------------------------
// 7. Precision/Recall stability

std::string criterion_accuracy_stability() {
    auto events = make_desk_log();
    Timestamp split = events[events.size() * 4 / 5].timestamp;
    ServiceParams service;

    ReplayConfig always;
    always.policy = Policy::always;
    always.bucket_len = 20000;
    always.split_time = split;

    ReplayConfig adaptive = always;
    adaptive.policy = Policy::adaptive;
    adaptive.lambda = 1.0;  // per 20000-s bucket

    auto ma = replay(events, always, service);
    auto mb = replay(events, adaptive, service);
    require(ma.precision_at_n && ma.recall_at_n, "always run produced no accuracy");
    require(mb.precision_at_n && mb.recall_at_n, "adaptive run produced no accuracy");

    double dp = std::abs(*ma.precision_at_n - *mb.precision_at_n);
    double dr = std::abs(*ma.recall_at_n - *mb.recall_at_n);
    require(dp <= 0.05, "precision moved by " + fmt(dp));
    require(dr <= 0.05, "recall moved by " + fmt(dr));
    require(mb.recompute_count * 2 <= ma.recompute_count,
            "adaptive recomputes " + std::to_string(mb.recompute_count) +
                " not half of always " + std::to_string(ma.recompute_count));
    return "P " + fmt(*ma.precision_at_n) + " vs " + fmt(*mb.precision_at_n) + ", R " +
           fmt(*ma.recall_at_n) + " vs " + fmt(*mb.recall_at_n) + ", recomputes " +
           std::to_string(mb.recompute_count) + "/" + std::to_string(ma.recompute_count);
}

// ---------------------------------------------------------------------------
// 8. Bot-ring detection

std::string criterion_bot_rings() {
    auto organic = store_from(make_desk_log());
    BotDetectionOptions opts;  // epsilon 0.01, min_duration 3
    auto clean = detect_bot_rings(organic, make_grid(organic, 10000), opts);
    require(clean.empty(), std::to_string(clean.size()) + " false rings on organic data");

    auto events = make_desk_log();
    inject_ring(events, 9001, 4, 30, 1000, 2000);
    auto store = store_from(events);
    auto rings = detect_bot_rings(store, make_grid(store, 10000), opts);
    require(rings.size() == 1, "expected exactly one ring, got " +
                                   std::to_string(rings.size()));
    require(rings[0].members == std::vector<UserId>{9001, 9002, 9003, 9004},
            "ring membership wrong");
    return "organic clean, injected ring {9001..9004} found (k_min=" +
           fmt(rings[0].min_pairwise_k) + ")";
}

// ---------------------------------------------------------------------------
// 9. Determinism and persistence (CLI)

struct CliRun {
    int exit_code = -1;
    std::string output;  // combined stdout+stderr
};

CliRun run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
    std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    int status = std::system(cmd.c_str());
    CliRun r;
    r.exit_code = (status >= 256) ? status / 256 : status;  // WEXITSTATUS equivalent
    std::ifstream in(log, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.output = buf.str();
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(static_cast<bool>(in), "missing artifact " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Runs the whole pipeline in `base`, returning every observable byte stream.
std::vector<std::pair<std::string, std::string>> run_pipeline(const std::string& cli,
                                                              const fs::path& base,
                                                              Timestamp split) {
    fs::create_directories(base / "art");
    auto events = make_desk_log();
    inject_ring(events, 9001, 4, 30, 1000, 2000);
    {
        std::ofstream out(base / "ratings.csv", std::ios::binary);
        write_ratings_csv(events, out);
    }
    auto ratings = (base / "ratings.csv").string();
    auto store = (base / "store.graph").string();
    auto art = (base / "art").string();

    std::vector<std::pair<std::string, std::string>> observed;
    auto step = [&](const std::string& name, const std::string& args) {
        auto r = run_cli(cli, args, base / (name + ".log"));
        require(r.exit_code == 0,
                name + " exited with " + std::to_string(r.exit_code) + ": " + r.output);
        // commands echo paths of the artifacts they wrote; mask the run
        // directory so the two runs stay byte-comparable
        std::string masked = r.output;
        const std::string root = base.string();
        for (std::size_t at = masked.find(root); at != std::string::npos;
             at = masked.find(root, at))
            masked.replace(at, root.size(), "$DIR");
        observed.emplace_back("stdout:" + name, masked);
    };

    step("ingest", "ingest --input \"" + ratings + "\" --store \"" + store + "\"");
    step("stability", "stability --store \"" + store + "\" --out_dir \"" + art +
                          "\" --bucket_len 20000 --min_active_buckets 3");
    step("fit", "fit --input \"" + art + "/histogram.csv\" --out_dir \"" + art + "\"");
    step("schedule", "schedule --store \"" + store +
                         "\" --lambda 0.046 --p_b 0.1 --n_cr 0.2 --bucket_len 20000 "
                         "--per_user --min_intervals 5 --groups 3");
    step("simulate", "simulate --input \"" + ratings +
                         "\" --policy periodic --delta 20000 --bucket_len 20000 "
                         "--split_time " + std::to_string(split) + " --out_dir \"" + art +
                         "\"");
    step("detect-bots", "detect-bots --store \"" + store +
                            "\" --bucket_len 10000 --out_dir \"" + art + "\"");

    for (const char* rel : {"art/table1.csv", "art/histogram.csv",
                            "art/histogram_smoothed.csv", "art/survival.csv",
                            "art/fit.csv", "art/replay.csv", "art/rings.csv",
                            "store.graph"})
        observed.emplace_back(rel, read_file(base / rel));
    return observed;
}

std::string criterion_determinism() {
    const char* cli_env = std::getenv("SIMDECAY_CLI");
    require(cli_env != nullptr, "SIMDECAY_CLI not set");
    std::string cli = cli_env;

    auto events = make_desk_log();
    Timestamp split = events[events.size() * 4 / 5].timestamp;

    fs::path base = fs::temp_directory_path() / "simdecay_accept";
    fs::remove_all(base);
    auto a = run_pipeline(cli, base / "a", split);
    auto b = run_pipeline(cli, base / "b", split);
    require(a.size() == b.size(), "pipeline runs observed different artifact sets");
    for (std::size_t i = 0; i < a.size(); ++i) {
        require(a[i].first == b[i].first, "artifact order diverged");
        require(a[i].second == b[i].second, "re-run differs at " + a[i].first);
    }

    // store persistence: load -> write -> read -> write is byte-stable and
    // observationally identical
    GraphStore s1 = GraphStore::load((base / "a" / "store.graph").string());
    std::stringstream w1;
    s1.write(w1);
    GraphStore s2 = GraphStore::read(w1);
    std::stringstream w2;
    s2.write(w2);
    std::stringstream w1b;
    s1.write(w1b);
    require(w1b.str() == w2.str(), "store round-trip not byte-stable");
    require(s1.users() == s2.users() && s1.items() == s2.items() &&
                s1.similarities() == s2.similarities() &&
                s1.rating_count() == s2.rating_count(),
            "store round-trip changed observable state");

    // error-path exit codes
    auto bad_input = run_cli(cli, "ingest --input /nonexistent.csv --store /tmp/x.graph",
                             base / "bad_input.log");
    require(bad_input.exit_code == 2, "bad input path should exit 2, got " +
                                          std::to_string(bad_input.exit_code));
    {
        std::ofstream one(base / "one_point.csv");
        one << "t,n\n1,5\n";
    }
    auto thin = run_cli(cli, "fit --input \"" + (base / "one_point.csv").string() +
                                 "\" --out_dir \"" + (base / "thin").string() + "\"",
                        base / "thin.log");
    require(thin.exit_code == 3, "single-point fit should exit 3, got " +
                                     std::to_string(thin.exit_code));
    auto infeasible = run_cli(
        cli, "schedule --store \"" + (base / "a" / "store.graph").string() +
                 "\" --lambda 0.046 --p_b 0.3 --n_cr 0.2", base / "infeasible.log");
    require(infeasible.exit_code == 4, "infeasible budget should exit 4, got " +
                                           std::to_string(infeasible.exit_code));
    auto bad_eps = run_cli(cli, "detect-bots --store \"" +
                                    (base / "a" / "store.graph").string() +
                                    "\" --epsilon 1.0", base / "bad_eps.log");
    require(bad_eps.exit_code == 2, "epsilon=1 should exit 2, got " +
                                        std::to_string(bad_eps.exit_code));

    fs::remove_all(base);
    return "6 commands byte-identical across reruns; store round-trips; exit codes 2/3/4";
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<std::string()> run;
    };
    std::vector<Criterion> criteria = {
        {1, "similarity-equivalence", criterion_similarity},
        {2, "regression-exactness", criterion_regression},
        {3, "decay-identities", criterion_identities},
        {4, "optimization-correctness", criterion_optimization},
        {5, "service-time-halving", criterion_halving},
        {6, "qualitative-reproduction", criterion_reproduction},
        {7, "precision-recall-stability", criterion_accuracy_stability},
        {8, "bot-ring-detection", criterion_bot_rings},
        {9, "determinism-and-persistence", criterion_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        try {
            std::string detail = c.run();
            std::cout << "PASS " << c.id << " " << c.name << " (" << detail << ")\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL " << c.id << " " << c.name << ": " << e.what() << "\n";
        }
        std::cout.flush();
    }
    if (failures > 0) {
        std::cout << failures << " of " << criteria.size() << " criteria failed\n";
        return 1;
    }
    std::cout << "all " << criteria.size() << " criteria passed\n";
    return 0;
}
