// Command-line front end: exact confidence sets (`ci`), Monte Carlo studies
// (`simulate`), and fast-vs-brute-force verification (`oracle-check`).
//
// Exit codes: 0 success, 2 usage error (bad flags/values), 1 runtime error
// (unreadable or malformed data, guard violations, internal failures).
// `oracle-check` also exits 1 when the fast path and the oracle disagree.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "randci/balanced.hpp"
#include "randci/core.hpp"
#include "randci/fraction.hpp"
#include "randci/general.hpp"
#include "randci/io.hpp"
#include "randci/oracle.hpp"
#include "randci/pairs.hpp"
#include "randci/simulate.hpp"

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

randci::Design parse_design(const std::string& name) {
    if (name == "balanced-bernoulli") return randci::Design::balanced_bernoulli;
    if (name == "matched-pairs") return randci::Design::matched_pairs;
    if (name == "bernoulli") return randci::Design::general_bernoulli;
    throw UsageError("unknown design '" + name +
                     "' (expected balanced-bernoulli, matched-pairs, or bernoulli)");
}

randci::Frac parse_alpha_flag(const std::string& text) {
    randci::Frac alpha;
    try {
        alpha = randci::parse_fraction(text);
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad --alpha: ") + e.what());
    }
    try {
        randci::validate_alpha(alpha);
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad --alpha: ") + e.what());
    }
    return alpha;
}

// Treatment probability u/q for the general design; the balanced design
// only accepts 1/2 and matched pairs take no --p at all.
std::pair<long long, long long> parse_p_flag(const std::string& text) {
    randci::Frac p;
    try {
        p = randci::parse_fraction(text);
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad --p: ") + e.what());
    }
    if (!(p.num > 0 && p.num < p.den)) throw UsageError("bad --p: must satisfy 0 < p < 1");
    return {p.num, p.den};
}

// Shared input flags for `ci` and `oracle-check`.
struct InputFlags {
    std::string design_name = "balanced-bernoulli";
    std::string counts_text;
    std::string data_path;
    std::string alpha_text = "0.05";
    std::string p_text = "1/2";

    void attach(CLI::App* cmd, bool with_p = true) {
        cmd->add_option("--design", design_name,
                        "Design: balanced-bernoulli, matched-pairs, bernoulli")
            ->capture_default_str();
        cmd->add_option("--counts", counts_text,
                        "Observed table: n11,n01,n10,n00 (unit designs) or the 3x2 pair "
                        "table p_t,p_c,z_t,z_c,m_t,m_c (rows W=+1,0,-1 by z=1,0)");
        cmd->add_option("--data", data_path, "CSV file: 'y,z' rows or 'pair_id,y,z' rows");
        cmd->add_option("--alpha", alpha_text, "Significance level (exact, e.g. 0.05 or 1/20)")
            ->capture_default_str();
        if (with_p)
            cmd->add_option("--p", p_text, "Treatment probability u/q (bernoulli design)")
                ->capture_default_str();
    }

    randci::Design design() const { return parse_design(design_name); }

    void check_source() const {
        if (counts_text.empty() == data_path.empty())
            throw UsageError("provide exactly one of --counts or --data");
    }

    randci::ObservedCounts unit_counts() const {
        check_source();
        if (!counts_text.empty()) {
            std::vector<long long> v;
            try {
                v = randci::parse_counts_list(counts_text, 4);
            } catch (const std::exception& e) {
                throw UsageError(std::string("bad --counts: ") + e.what());
            }
            randci::ObservedCounts c{v[0], v[1], v[2], v[3]};
            randci::validate_counts(c);
            return c;
        }
        return randci::counts_from_units(randci::read_unit_csv(data_path));
    }

    randci::PairCounts pair_counts() const {
        check_source();
        if (!counts_text.empty()) {
            std::vector<long long> v;
            try {
                v = randci::parse_counts_list(counts_text, 6);
            } catch (const std::exception& e) {
                throw UsageError(std::string("bad --counts: ") + e.what());
            }
            randci::PairCounts c{v[0], v[1], v[2], v[3], v[4], v[5]};
            randci::validate_pair_counts(c);
            return c;
        }
        return randci::pair_reduce(randci::read_pair_csv(data_path));
    }
};

std::string format_decimal(double x) {
    std::ostringstream ss;
    ss.precision(12);
    ss << x;
    return ss.str();
}

std::string interval_text(const randci::ConfidenceResult& res) {
    if (res.empty()) return "empty";
    std::ostringstream ss;
    ss << "[" << res.lo_numerator() << "/" << res.denominator << ", " << res.hi_numerator()
       << "/" << res.denominator << "]  =  [" << format_decimal(randci::frac_to_double(res.lower()))
       << ", " << format_decimal(randci::frac_to_double(res.upper())) << "]";
    return ss.str();
}

json result_to_json(const std::string& design_name, const randci::Frac& alpha,
                    const randci::ConfidenceResult& res,
                    const std::optional<std::pair<double, double>>& pmax_endpoints) {
    json j;
    j["design"] = design_name;
    j["alpha"] = randci::frac_to_string(alpha);
    j["n"] = res.denominator;
    j["accepted"] = res.accepted;
    j["denominator"] = res.denominator;
    if (res.empty())
        j["interval"] = nullptr;
    else
        j["interval"] = {res.lo_numerator(), res.hi_numerator()};
    if (pmax_endpoints)
        j["pmax_endpoints"] = {pmax_endpoints->first, pmax_endpoints->second};
    else
        j["pmax_endpoints"] = nullptr;
    j["ledger"] = {{"tail_evaluations", res.ledger.tail_evaluations},
                   {"pmax_evaluations", res.ledger.pmax_evaluations}};
    return j;
}

// p_max at the interval endpoints, evaluated with a scratch ledger so the
// reported construction cost is untouched.
std::optional<std::pair<double, double>> endpoint_pmaxes(
    const randci::ConfidenceResult& res, const InputFlags& flags, long long u, long long q) {
    if (res.empty()) return std::nullopt;
    randci::TestLedger scratch;
    const randci::Design design = flags.design();
    if (design == randci::Design::matched_pairs) {
        const randci::PairCounts c = flags.pair_counts();
        return std::make_pair(randci::compute_pmax_pairs(c, res.lo_numerator(), scratch),
                              randci::compute_pmax_pairs(c, res.hi_numerator(), scratch));
    }
    const randci::ObservedCounts c = flags.unit_counts();
    if (design == randci::Design::balanced_bernoulli)
        return std::make_pair(randci::compute_pmax(c, res.lo_numerator(), scratch),
                              randci::compute_pmax(c, res.hi_numerator(), scratch));
    return std::make_pair(randci::pmax_general(c, res.lo_numerator(), u, q, scratch),
                          randci::pmax_general(c, res.hi_numerator(), u, q, scratch));
}

int run_ci(const InputFlags& flags, const std::string& format, bool show_ledger,
           unsigned jobs) {
    const randci::Design design = flags.design();
    const randci::Frac alpha = parse_alpha_flag(flags.alpha_text);
    auto [u, q] = parse_p_flag(flags.p_text);
    if (design == randci::Design::balanced_bernoulli && !(u == 1 && q == 2))
        throw UsageError("balanced design requires p = 1/2 (use --design bernoulli)");

    randci::ConfidenceResult res;
    if (design == randci::Design::matched_pairs) {
        res = randci::confidence_set_pairs(flags.pair_counts(), alpha);
    } else if (design == randci::Design::balanced_bernoulli) {
        res = randci::confidence_set(flags.unit_counts(), alpha);
    } else {
        res = randci::confidence_set_general(flags.unit_counts(), alpha, u, q, jobs);
    }
    const auto pm = endpoint_pmaxes(res, flags, u, q);

    if (format == "json") {
        std::cout << result_to_json(flags.design_name, alpha, res, pm).dump(2) << "\n";
        return 0;
    }
    if (format == "csv") {
        std::cout << "design,alpha,n,lo_numerator,hi_numerator,denominator,lo,hi,"
                     "tail_evaluations,pmax_evaluations\n";
        std::cout << flags.design_name << "," << randci::frac_to_string(alpha) << ","
                  << res.denominator << ",";
        if (res.empty())
            std::cout << ",,,,";
        else
            std::cout << res.lo_numerator() << "," << res.hi_numerator() << ","
                      << res.denominator << "," << format_decimal(randci::frac_to_double(res.lower()))
                      << "," << format_decimal(randci::frac_to_double(res.upper()));
        std::cout << "," << res.ledger.tail_evaluations << "," << res.ledger.pmax_evaluations
                  << "\n";
        return 0;
    }
    std::cout << "design:   " << flags.design_name << "\n";
    std::cout << "alpha:    " << randci::frac_to_string(alpha) << "\n";
    std::cout << "n:        " << res.denominator << "\n";
    std::cout << "interval: " << interval_text(res) << "\n";
    if (!res.empty()) {
        std::cout << "accepted: " << res.accepted.size() << " numerators over " << res.denominator
                  << "\n";
        std::cout << "p_max at endpoints: " << format_decimal(pm->first) << ", "
                  << format_decimal(pm->second) << "\n";
    }
    if (show_ledger)
        std::cout << "ledger:   " << res.ledger.tail_evaluations << " tail evaluations, "
                  << res.ledger.pmax_evaluations << " p_max evaluations\n";
    return 0;
}

int run_simulate(const std::string& design_name, long long n, int setting,
                 const std::string& alpha_text, std::uint64_t reps, std::uint64_t seed,
                 const std::string& p_text, unsigned jobs, const std::string& format) {
    randci::SimulationConfig cfg;
    cfg.design = parse_design(design_name);
    cfg.n = n;
    cfg.alpha = parse_alpha_flag(alpha_text);
    cfg.reps = reps;
    cfg.seed = seed;
    cfg.jobs = jobs;
    std::tie(cfg.u, cfg.q) = parse_p_flag(p_text);
    if (cfg.design == randci::Design::balanced_bernoulli && !(cfg.u == 1 && cfg.q == 2))
        throw UsageError("balanced design requires p = 1/2 (use --design bernoulli)");
    if (cfg.design == randci::Design::matched_pairs) {
        if (n <= 0 || n % 2 != 0) throw UsageError("matched pairs need even --n > 0");
        cfg.pair_classes = randci::pairs_setting(setting, n / 2);
    } else {
        if (n <= 0) throw UsageError("--n must be positive");
        cfg.unit_classes = randci::bernoulli_setting(setting, n);
    }
    const randci::SimulationReport rep = randci::simulate(cfg);

    if (format == "json") {
        json j;
        j["design"] = design_name;
        j["n"] = n;
        j["setting"] = setting;
        j["alpha"] = randci::frac_to_string(cfg.alpha);
        j["reps"] = rep.reps;
        j["seed"] = seed;
        j["true_tau"] = {rep.true_tau_numerator, n};
        j["coverage"] = rep.coverage;
        j["median_width"] = rep.median_width;
        j["max_width"] = rep.max_width;
        j["mean_tests"] = rep.mean_tests;
        j["mean_pmax_evaluations"] = rep.mean_pmax_evaluations;
        j["empty_sets"] = rep.empty_sets;
        j["wald_coverage"] = rep.wald_coverage;
        j["wald_median_width"] = rep.wald_median_width;
        j["wald_undefined"] = rep.wald_undefined;
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    if (format == "csv") {
        std::cout << "design,n,setting,alpha,reps,seed,true_tau_numerator,coverage,"
                     "median_width,mean_tests,empty_sets,wald_coverage,wald_median_width,"
                     "wald_undefined\n";
        std::cout << design_name << "," << n << "," << setting << ","
                  << randci::frac_to_string(cfg.alpha) << "," << rep.reps << "," << seed << ","
                  << rep.true_tau_numerator << "," << format_decimal(rep.coverage) << ","
                  << format_decimal(rep.median_width) << "," << format_decimal(rep.mean_tests)
                  << "," << rep.empty_sets << "," << format_decimal(rep.wald_coverage) << ","
                  << format_decimal(rep.wald_median_width) << "," << rep.wald_undefined << "\n";
        return 0;
    }
    std::cout << "design:     " << design_name << " (setting " << setting << ")\n";
    std::cout << "n:          " << n << "\n";
    std::cout << "true tau:   " << rep.true_tau_numerator << "/" << n << "  =  "
              << format_decimal(static_cast<double>(rep.true_tau_numerator) /
                                static_cast<double>(n))
              << "\n";
    std::cout << "replicates: " << rep.reps << " (seed " << seed << ")\n";
    std::cout << "mean tests: " << format_decimal(rep.mean_tests) << " per interval ("
              << format_decimal(rep.mean_pmax_evaluations) << " p_max evaluations)\n\n";
    std::ostringstream exact_cov, exact_w, wald_cov, wald_w;
    exact_cov << std::fixed << std::setprecision(4) << rep.coverage;
    exact_w << std::fixed << std::setprecision(4) << rep.median_width;
    wald_cov << std::fixed << std::setprecision(4) << rep.wald_coverage;
    wald_w << std::fixed << std::setprecision(4) << rep.wald_median_width;
    std::cout << std::left << std::setw(14) << "method" << std::right << std::setw(10)
              << "coverage" << std::setw(15) << "median width" << std::setw(12) << "degenerate"
              << "\n";
    std::cout << std::left << std::setw(14) << "exact" << std::right << std::setw(10)
              << exact_cov.str() << std::setw(15) << exact_w.str() << std::setw(12)
              << rep.empty_sets << "\n";
    std::cout << std::left << std::setw(14) << "wald" << std::right << std::setw(10)
              << wald_cov.str() << std::setw(15) << wald_w.str() << std::setw(12)
              << rep.wald_undefined << "\n";
    return 0;
}

int run_oracle_check(const InputFlags& flags, const std::string& format, unsigned jobs) {
    const randci::Design design = flags.design();
    const randci::Frac alpha = parse_alpha_flag(flags.alpha_text);
    auto [u, q] = parse_p_flag(flags.p_text);
    if (design == randci::Design::balanced_bernoulli && !(u == 1 && q == 2))
        throw UsageError("balanced design requires p = 1/2 (use --design bernoulli)");

    randci::ConfidenceResult fast, oracle;
    if (design == randci::Design::matched_pairs) {
        const randci::PairCounts c = flags.pair_counts();
        fast = randci::confidence_set_pairs(c, alpha);
        oracle = randci::oracle_confidence_set(c, alpha);
    } else {
        const randci::ObservedCounts c = flags.unit_counts();
        if (design == randci::Design::balanced_bernoulli) {
            fast = randci::confidence_set(c, alpha);
        } else {
            fast = randci::confidence_set_general(c, alpha, u, q, jobs);
        }
        oracle = randci::oracle_confidence_set(c, design, u, q, alpha);
    }
    const bool agree = fast.accepted == oracle.accepted;

    if (format == "json") {
        json j;
        j["design"] = flags.design_name;
        j["alpha"] = randci::frac_to_string(alpha);
        j["n"] = fast.denominator;
        j["fast"] = result_to_json(flags.design_name, alpha, fast, std::nullopt);
        j["oracle"] = result_to_json(flags.design_name, alpha, oracle, std::nullopt);
        j["agree"] = agree;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "design:          " << flags.design_name << "\n";
        std::cout << "alpha:           " << randci::frac_to_string(alpha) << "\n";
        std::cout << "fast interval:   " << interval_text(fast) << "  ("
                  << fast.ledger.tail_evaluations << " tests)\n";
        std::cout << "oracle interval: " << interval_text(oracle) << "  ("
                  << oracle.ledger.tail_evaluations << " enumerated vectors)\n";
        std::cout << "agree:           " << (agree ? "yes" : "NO") << "\n";
    }
    return agree ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact confidence sets for the average treatment effect in "
                 "binary randomized experiments"};
    app.require_subcommand(1);
    app.fallthrough();  // accept --format/--jobs/--seed after the subcommand too

    std::string format = "text";
    unsigned jobs = 1;
    std::uint64_t seed = 20240801;
    app.add_option("--format", format, "Output format: text, json, csv")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "json", "csv"}));
    app.add_option("--jobs", jobs, "Worker threads (0 = all cores)")->capture_default_str();
    app.add_option("--seed", seed, "RNG seed (simulate)")->capture_default_str();

    InputFlags ci_flags;
    bool show_ledger = false;
    CLI::App* ci = app.add_subcommand("ci", "Exact confidence set for one data set");
    ci_flags.attach(ci);
    ci->add_flag("--ledger", show_ledger, "Print test-count ledger");

    std::string sim_design = "balanced-bernoulli";
    long long sim_n = 100;
    int sim_setting = 1;
    std::string sim_alpha = "0.05";
    std::uint64_t sim_reps = 1000;
    std::string sim_p = "1/2";
    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo coverage/width study");
    sim->add_option("--design", sim_design, "Design: balanced-bernoulli, matched-pairs, bernoulli")
        ->capture_default_str();
    sim->add_option("--n", sim_n, "Units per replicate (pairs design: 2m)")
        ->capture_default_str();
    sim->add_option("--setting", sim_setting, "Benchmark population: 1 or 2")
        ->capture_default_str()
        ->check(CLI::IsMember({1, 2}));
    sim->add_option("--alpha", sim_alpha, "Significance level")->capture_default_str();
    sim->add_option("--reps", sim_reps, "Number of replicates")->capture_default_str();
    sim->add_option("--p", sim_p, "Treatment probability u/q (bernoulli design)")
        ->capture_default_str();

    InputFlags oc_flags;
    CLI::App* oc = app.add_subcommand("oracle-check",
                                      "Compare the fast construction against brute force");
    oc_flags.attach(oc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ci->parsed()) return run_ci(ci_flags, format, show_ledger, jobs);
        if (sim->parsed())
            return run_simulate(sim_design, sim_n, sim_setting, sim_alpha, sim_reps, seed,
                                sim_p, jobs, format);
        return run_oracle_check(oc_flags, format, jobs);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
