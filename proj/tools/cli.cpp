#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "markov_panel/chain_analysis.hpp"
#include "markov_panel/errors.hpp"
#include "markov_panel/estimation_bayes.hpp"
#include "markov_panel/estimation_mle.hpp"
#include "markov_panel/gof_bootstrap.hpp"
#include "markov_panel/panel_io.hpp"
#include "markov_panel/sim_study.hpp"
#include "markov_panel/state_model.hpp"

namespace markov_panel::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 1;

// Bad paths, unreadable files, malformed JSON inputs.
class InputError : public Error {
  public:
    using Error::Error;
};

std::string read_text(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + path + "'");
    out << content;
}

std::string format_number(double x, int precision = 10) {
    std::ostringstream s;
    s << std::setprecision(precision) << x;
    return s.str();
}

std::string fixed4(double x) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << x;
    return s.str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t> &flag) {
    if (flag)
        return *flag;
    if (const char *env = std::getenv(kSeedEnv)) {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(env, &used);
            if (used == std::string(env).size())
                return v;
        } catch (const std::exception &) {
        }
        throw InputError(std::string(kSeedEnv) + " is not an unsigned integer");
    }
    return kDefaultSeed;
}

State parse_state(const std::string &s) {
    const auto st = s.size() == 1 ? state_from_symbol(s[0]) : std::nullopt;
    if (!st)
        throw InputError("unknown state '" + s + "' (expected F, C, J or B)");
    return *st;
}

json theta_json(const ThetaVector<double> &t) {
    json a = json::array();
    for (int i = 0; i < kNumParams; ++i)
        a.push_back(t(i));
    return a;
}

json matrix_json(const Eigen::Matrix4d &q) {
    json rows = json::array();
    for (int i = 0; i < kNumStates; ++i) {
        json row = json::array();
        for (int j = 0; j < kNumStates; ++j)
            row.push_back(q(i, j));
        rows.push_back(row);
    }
    return json{{"states", {"F", "C", "J", "B"}}, {"rows", rows}};
}

json counts_json(const TransitionCounts &n) {
    json rows = json::array();
    for (int i = 0; i < kNumStates; ++i) {
        json row = json::array();
        for (int j = 0; j < kNumStates; ++j)
            row.push_back(n(i, j));
        rows.push_back(row);
    }
    return json{{"states", {"F", "C", "J", "B"}}, {"rows", rows}};
}

// Published-table convention: free cells cut to four decimals, each diagonal cell
// deduced as one minus the printed cells of its row, structural zeros as "0".
std::string matrix_table(const Eigen::Matrix4d &q) {
    const auto cut = [](double x) { return std::floor(x * 1e4 + 1e-9) / 1e4; };
    std::ostringstream s;
    s << "from\\to        F        C        J        B\n";
    for (int i = 0; i < kNumStates; ++i) {
        const State from = static_cast<State>(i);
        double others = 0.0;
        for (int j = 0; j < kNumStates; ++j)
            if (j != i && !is_forbidden(from, static_cast<State>(j)))
                others += cut(q(i, j));
        s << "   " << symbol(from) << "   ";
        for (int j = 0; j < kNumStates; ++j) {
            std::string cell;
            if (is_forbidden(from, static_cast<State>(j)))
                cell = "0";
            else if (i == j)
                cell = i == index(State::B) ? "1" : fixed4(1.0 - others);
            else
                cell = fixed4(cut(q(i, j)));
            s << std::setw(9) << cell;
        }
        s << '\n';
    }
    return s.str();
}

std::string matrix_csv(const Eigen::Matrix4d &q) {
    std::ostringstream s;
    s << "from,F,C,J,B\n";
    for (int i = 0; i < kNumStates; ++i) {
        s << symbol(static_cast<State>(i));
        for (int j = 0; j < kNumStates; ++j)
            s << ',' << format_number(q(i, j), 17);
        s << '\n';
    }
    return s.str();
}

json make_report(const std::string &command) {
    json r;
    r["command"] = command;
    r["config"] = json::object();
    r["results"] = json::object();
    r["warnings"] = json::array();
    return r;
}

void emit_json(std::ostream &out, json &report, bool timing,
               std::chrono::steady_clock::time_point start) {
    if (timing)
        report["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    out << report.dump(2) << '\n';
}

struct Fit {
    ThetaParams theta;
    std::string estimator;
    json details;
};

// MCMC settings shared by estimate and analyze.
struct McmcFlags {
    std::size_t iters = 200000;
    double sigma = 0.01;
    std::optional<std::size_t> burn_in;
};

Fit fit_panel(const ParcelPanel &panel, const std::string &estimator, const McmcFlags &flags,
              std::uint64_t seed, json &warnings, const std::string &trace_path = {}) {
    const TransitionCounts counts = count_transitions(panel);
    const MleResult m = mle(counts);
    for (const auto &w : m.warnings)
        warnings.push_back(w);

    json details;
    details["counts"] = counts_json(counts);
    details["mle_theta"] = theta_json(m.theta_hat.vector());
    details["log_likelihood_at_mle"] = log_likelihood(m.theta_hat, m.counts_used);
    if (estimator == "mle")
        return Fit{m.theta_hat, estimator, details};

    McmcConfig cfg;
    cfg.proposal_sigma = flags.sigma;
    cfg.n_iterations = flags.iters;
    cfg.burn_in = flags.burn_in ? *flags.burn_in : flags.iters / 10;
    cfg.seed = seed;
    const ThetaParams start = interior_start(m.theta_hat);
    if (!(start == m.theta_hat))
        warnings.push_back("MCMC start clipped into the interior of the parameter set");
    cfg.theta_init = start.vector();
    const PriorSpec prior{estimator == "jeffreys" ? PriorKind::Jeffreys : PriorKind::Uniform,
                          panel.n_years(), panel.n_parcels()};
    const McmcTrace trace = sample_posterior(m.counts_used, prior, cfg);
    const ThetaParams estimate = bayes_estimate(trace);

    details["mcmc"] = {{"proposal_sigma", cfg.proposal_sigma},
                       {"iterations", cfg.n_iterations},
                       {"burn_in", cfg.burn_in},
                       {"seed", cfg.seed},
                       {"theta_init", theta_json(cfg.theta_init)},
                       {"acceptance_rate", trace.acceptance_rate},
                       {"n_samples", trace.samples.size()},
                       {"running_mean_all", theta_json(trace.running_mean_all)}};
    if (!trace_path.empty()) {
        std::ostringstream csv;
        csv << "iteration,theta1,theta2,theta3,theta4,theta5\n";
        for (std::size_t i = 0; i < trace.samples.size(); ++i) {
            csv << cfg.burn_in + i + 1;
            for (int k = 0; k < kNumParams; ++k)
                csv << ',' << format_number(trace.samples[i](k), 17);
            csv << '\n';
        }
        write_text(trace_path, csv.str());
    }
    return Fit{estimate, estimator, details};
}

void check_choice(const std::string &value, std::initializer_list<const char *> choices, const char *flag) {
    for (const char *c : choices)
        if (value == c)
            return;
    throw InputError(std::string("invalid value '") + value + "' for " + flag);
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string input;
    std::string prior = "mle";
    McmcFlags mcmc;
    std::optional<std::uint64_t> seed;
    std::string out = "json";
    std::string trace;
    bool timing = false;
};

int cmd_estimate(const EstimateArgs &a, std::ostream &out) {
    const auto start = std::chrono::steady_clock::now();
    check_choice(a.prior, {"mle", "jeffreys", "uniform"}, "--prior");
    check_choice(a.out, {"json", "csv", "table"}, "--out");
    const ParcelPanel panel = parse_panel_auto(read_text(a.input));
    const std::uint64_t seed = resolve_seed(a.seed);

    json report = make_report("estimate");
    report["config"] = {{"input", a.input}, {"prior", a.prior}, {"n_years", panel.n_years()},
                        {"n_parcels", panel.n_parcels()}};
    if (a.prior != "mle")
        report["config"].update({{"iters", a.mcmc.iters},
                                 {"sigma", a.mcmc.sigma},
                                 {"burn_in", a.mcmc.burn_in ? *a.mcmc.burn_in : a.mcmc.iters / 10},
                                 {"seed", seed}});
    const Fit fit = fit_panel(panel, a.prior, a.mcmc, seed, report["warnings"], a.trace);
    const Eigen::Matrix4d q = build_matrix(fit.theta);

    if (a.out == "table") {
        out << (a.prior == "mle" ? "Maximum likelihood estimates" : "Bayesian estimates (" + a.prior + " prior)")
            << "\n\n"
            << matrix_table(q) << "\ntheta = (";
        for (int i = 0; i < kNumParams; ++i)
            out << (i ? ", " : "") << format_number(fit.theta(i), 6);
        out << ")\n";
        if (fit.details.contains("mcmc"))
            out << "acceptance rate = " << fixed4(fit.details["mcmc"]["acceptance_rate"].get<double>()) << '\n';
        for (const auto &w : report["warnings"])
            out << "warning: " << w.get<std::string>() << '\n';
        return kExitOk;
    }
    if (a.out == "csv") {
        out << matrix_csv(q);
        return kExitOk;
    }
    report["results"] = {{"estimator", fit.estimator}, {"theta", theta_json(fit.theta.vector())},
                         {"matrix", matrix_json(q)}};
    report["results"].update(fit.details);
    emit_json(out, report, a.timing, start);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string input;
    std::string estimator = "mle";
    McmcFlags mcmc;
    std::optional<std::uint64_t> seed;
    int horizon = 5000;
    std::string from = "F";
    std::string to = "B";
    std::string pmf_csv;
    std::string out = "json";
    bool timing = false;
};

ThetaParams theta_from_json(const json &doc) {
    const json *node = &doc;
    if (doc.contains("results"))
        node = &doc["results"];
    if (node->contains("theta")) {
        const auto values = (*node)["theta"].get<std::vector<double>>();
        Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i)
            v(static_cast<Eigen::Index>(i)) = values[i];
        return validate_theta(v);
    }
    if (node->contains("matrix")) {
        const json &m = (*node)["matrix"];
        const json &rows = m.is_object() ? m.at("rows") : m;
        TransitionMatrix q;
        if (rows.size() != kNumStates)
            throw InputError("matrix must have 4 rows");
        for (int i = 0; i < kNumStates; ++i) {
            if (rows[static_cast<std::size_t>(i)].size() != kNumStates)
                throw InputError("matrix rows must have 4 entries");
            for (int j = 0; j < kNumStates; ++j)
                q(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
        }
        return theta_from_matrix(q);
    }
    throw InputError("JSON input needs a 'theta' or 'matrix' field");
}

int cmd_analyze(const AnalyzeArgs &a, std::ostream &out) {
    const auto start = std::chrono::steady_clock::now();
    check_choice(a.estimator, {"mle", "jeffreys", "uniform"}, "--estimator");
    check_choice(a.out, {"json", "csv", "table"}, "--out");
    if (a.horizon < 1)
        throw InputError("--horizon must be at least 1");
    const State from = parse_state(a.from);
    const State to = parse_state(a.to);

    json report = make_report("analyze");
    report["config"] = {{"input", a.input}, {"horizon", a.horizon}, {"from", a.from}, {"to", a.to}};

    const std::string text = read_text(a.input);
    const auto first = text.find_first_not_of(" \t\r\n");
    ThetaParams theta = validate_theta({0, 0, 0, 0, 0});
    if (first != std::string::npos && text[first] == '{') {
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::exception &e) {
            throw InputError(std::string("invalid JSON: ") + e.what());
        }
        theta = theta_from_json(doc);
        report["config"]["source"] = "parameters";
    } else {
        const std::uint64_t seed = resolve_seed(a.seed);
        const ParcelPanel panel = parse_panel_auto(text);
        report["config"]["source"] = "panel";
        report["config"]["estimator"] = a.estimator;
        if (a.estimator != "mle")
            report["config"]["seed"] = seed;
        theta = fit_panel(panel, a.estimator, a.mcmc, seed, report["warnings"]).theta;
    }
    const TransitionMatrix q = build_matrix(theta);

    // Any reachable target is reached within kNumStates steps with positive probability.
    if (first_passage_pmf(q, from, to, kNumStates).total_mass() == 0.0)
        throw Unreachable(std::string("state ") + symbol(to) + " cannot be reached from " + symbol(from));
    std::optional<double> mean;
    if (hits_almost_surely(q, index(from), index(to)))
        mean = hitting_time_mean(q, from, to);
    else
        report["warnings"].push_back(std::string("state ") + symbol(to) + " is reached from " + symbol(from) +
                                     " with probability < 1; mean hitting time is infinite");
    const FirstPassagePmf pmf = first_passage_pmf(q, from, to, a.horizon);
    const double residual = survival_mass(q, index(from), index(to), a.horizon);
    const int median = pmf.median();
    if (median == 0)
        report["warnings"].push_back("median hitting time exceeds the horizon");

    std::ostringstream pmf_csv;
    pmf_csv << "n,f\n";
    for (int n = 1; n <= a.horizon; ++n)
        pmf_csv << n << ',' << format_number(pmf(n), 17) << '\n';
    if (!a.pmf_csv.empty())
        write_text(a.pmf_csv, pmf_csv.str());

    json qs_json = nullptr;
    std::optional<QuasiStationary> qs;
    try {
        qs = quasi_stationary(q);
        const Eigen::Vector3d by_iteration = quasi_stationary_by_iteration(q, a.horizon);
        qs_json = {{"mu", {{"F", qs->mu(0)}, {"C", qs->mu(1)}, {"J", qs->mu(2)}}},
                   {"lambda", qs->lambda},
                   {"mu_by_iteration", {{"n", a.horizon}, {"F", by_iteration(0)}, {"C", by_iteration(1)}, {"J", by_iteration(2)}}}};
    } catch (const DegenerateBlock &e) {
        report["warnings"].push_back(std::string("quasi-stationary distribution: ") + e.what());
    }

    if (a.out == "csv") {
        out << pmf_csv.str();
        return kExitOk;
    }
    if (a.out == "table") {
        out << matrix_table(q) << '\n'
            << "time to reach " << a.to << " from " << a.from << ":\n"
            << "  mean   = " << (mean ? fixed4(*mean) : std::string("inf")) << '\n'
            << "  median = " << median << '\n'
            << "  P(tau > " << a.horizon << ") = " << format_number(residual) << '\n';
        if (qs)
            out << "quasi-stationary distribution (F, C, J) = (" << fixed4(qs->mu(0)) << ", " << fixed4(qs->mu(1))
                << ", " << fixed4(qs->mu(2)) << "), lambda = " << format_number(qs->lambda) << '\n';
        for (const auto &w : report["warnings"])
            out << "warning: " << w.get<std::string>() << '\n';
        return kExitOk;
    }

    json f = json::array();
    for (double x : pmf.f)
        f.push_back(x);
    report["results"] = {{"theta", theta_json(theta.vector())},
                         {"matrix", matrix_json(q)},
                         {"first_passage",
                          {{"from", a.from},
                           {"to", a.to},
                           {"horizon", a.horizon},
                           {"mean", mean ? json(*mean) : json(nullptr)},
                           {"truncated_mean", pmf.truncated_mean()},
                           {"median", median},
                           {"mass_within_horizon", pmf.total_mass()},
                           {"residual_mass", residual},
                           {"pmf", f}}},
                         {"quasi_stationary", qs_json}};
    emit_json(out, report, a.timing, start);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct GofArgs {
    std::string input;
    std::string state = "F";
    std::size_t reps = 1000;
    double alpha = 0.05;
    std::string variant = "pmf";
    std::optional<std::uint64_t> seed;
    std::string boot_csv;
    std::string out = "json";
    bool timing = false;
};

int cmd_gof(const GofArgs &a, std::ostream &out) {
    const auto start = std::chrono::steady_clock::now();
    check_choice(a.out, {"json", "csv", "table"}, "--out");
    const State state = parse_state(a.state);
    const DistanceVariant variant = distance_variant_from_string(a.variant);
    if (!(a.alpha >= 0 && a.alpha <= 1))
        throw InputError("--alpha must be in [0, 1]");
    if (a.reps < 1)
        throw InputError("--reps must be at least 1");
    const std::uint64_t seed = resolve_seed(a.seed);
    const ParcelPanel panel = parse_panel_auto(read_text(a.input));
    const SpellSample spells = extract_spells(panel, state);

    json report = make_report("gof");
    report["config"] = {{"input", a.input}, {"state", a.state}, {"reps", a.reps},
                        {"alpha", a.alpha}, {"variant", a.variant}, {"seed", seed}};
    if (spells.censored_count > 0)
        report["warnings"].push_back(std::to_string(spells.censored_count) +
                                     " right-censored spell(s) excluded");

    const GofResult r = parametric_bootstrap(spells.durations, a.reps, a.alpha, variant, seed, state);

    std::ostringstream boot;
    boot << "replicate,k\n";
    for (std::size_t m = 0; m < r.k_boot.size(); ++m)
        boot << m + 1 << ',' << format_number(r.k_boot[m], 17) << '\n';
    if (!a.boot_csv.empty())
        write_text(a.boot_csv, boot.str());

    const auto table = spells.multiplicities();
    if (a.out == "csv") {
        out << boot.str();
        return kExitOk;
    }
    if (a.out == "table") {
        out << "state " << a.state << " holding times\n  duration:";
        for (const auto &[d, c] : table)
            out << std::setw(4) << d;
        out << "\n  count:   ";
        for (const auto &[d, c] : table)
            out << std::setw(4) << c;
        out << "\n\n  k = " << r.k << ", p_hat = " << format_number(r.p_hat, 6) << "\n  K* = " << fixed4(r.k_star)
            << "\n  p-value = " << format_number(r.p_value, 6) << " (M = " << r.m_reps << ")\n  decision: "
            << (r.reject ? "reject" : "retain") << " geometric hypothesis at alpha = " << a.alpha << '\n';
        return kExitOk;
    }

    json spell_rows = json::array();
    for (const auto &[d, c] : table)
        spell_rows.push_back({{"duration", d}, {"count", c}});
    const int max_n = table.empty() ? 0 : table.rbegin()->first;
    json fitted = json::array();
    for (int n = 1; n <= max_n; ++n) {
        const auto it = table.find(n);
        const double emp = it == table.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(r.k);
        fitted.push_back({{"n", n}, {"empirical", emp}, {"fitted", fitted_pmf(r.p_hat, n)}});
    }
    json k_boot = json::array();
    for (double x : r.k_boot)
        k_boot.push_back(x);
    report["results"] = {{"state", a.state},
                         {"spells", spell_rows},
                         {"censored_count", spells.censored_count},
                         {"k", r.k},
                         {"p_hat", r.p_hat},
                         {"k_star", r.k_star},
                         {"p_value", r.p_value},
                         {"alpha", r.alpha},
                         {"decision", r.reject ? "reject" : "retain"},
                         {"variant", to_string(r.variant)},
                         {"pmf_comparison", fitted},
                         {"k_boot", k_boot}};
    emit_json(out, report, a.timing, start);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::size_t reps = 200;
    bool full = false;
    std::size_t parcels = 43;
    std::size_t years = 22;
    std::optional<std::uint64_t> seed;
    std::size_t iters = 100000;
    double sigma = 0.03;
    std::optional<std::size_t> burn_in;
    unsigned threads = 1;
    std::size_t bins = 30;
    std::string csv;
    std::string hist_csv;
    bool two_state = false;
    double p = 0.1;
    double q = 0.1;
    std::size_t chain_length = 20;
    std::size_t two_state_reps = 500;
    std::string out = "json";
    bool timing = false;
};

std::string study_csv(const StudyResult &r) {
    std::ostringstream s;
    s << "index,theta1,theta2,theta3,theta4,theta5,err_mle_fro,err_bayes_fro,err_mle_2,err_bayes_2,skipped\n";
    for (const auto &rec : r.records) {
        s << rec.index;
        for (int k = 0; k < kNumParams; ++k)
            s << ',' << format_number(rec.theta_true(k), 17);
        if (rec.skipped)
            s << ",,,,,1\n";
        else
            s << ',' << format_number(rec.err_mle_fro, 17) << ',' << format_number(rec.err_bayes_fro, 17) << ','
              << format_number(rec.err_mle_2, 17) << ',' << format_number(rec.err_bayes_2, 17) << ",0\n";
    }
    return s.str();
}

int cmd_simulate(const SimulateArgs &a, std::ostream &out) {
    const auto start = std::chrono::steady_clock::now();
    check_choice(a.out, {"json", "csv", "table"}, "--out");
    if (a.years < 2 || a.parcels < 1)
        throw InputError("--years must be >= 2 and --parcels >= 1");
    if (a.bins < 1)
        throw InputError("--bins must be at least 1");
    const std::uint64_t seed = resolve_seed(a.seed);

    StudyConfig cfg;
    cfg.n_reps = a.full ? 1000 : a.reps;
    cfg.n_parcels = a.parcels;
    cfg.n_years = a.years;
    cfg.seed = seed;
    cfg.mcmc.proposal_sigma = a.sigma;
    cfg.mcmc.n_iterations = a.iters;
    cfg.mcmc.burn_in = a.burn_in ? *a.burn_in : a.iters / 10;
    cfg.n_threads = a.threads;
    const StudyResult result = run_study(cfg);

    json report = make_report("simulate");
    report["config"] = {{"reps", cfg.n_reps}, {"parcels", cfg.n_parcels}, {"years", cfg.n_years},
                        {"seed", seed}, {"iters", cfg.mcmc.n_iterations}, {"sigma", cfg.mcmc.proposal_sigma},
                        {"burn_in", cfg.mcmc.burn_in}, {"bins", a.bins}};
    if (result.n_skipped() > 0)
        report["warnings"].push_back(std::to_string(result.n_skipped()) + " replicate(s) skipped: degenerate counts");

    std::ostringstream hist_csv;
    hist_csv << "norm,estimator,bin_lo,bin_hi,density\n";
    json norms = json::object();
    const bool have_pairs = result.n_skipped() < result.records.size();
    for (MatrixNorm norm : {MatrixNorm::Frobenius, MatrixNorm::Spectral}) {
        if (!have_pairs)
            break;
        const auto e_mle = result.errors_mle(norm);
        const auto e_bayes = result.errors_bayes(norm);
        const PairedTest sign = sign_test_less(e_bayes, e_mle);
        const PairedTest rank = signed_rank_test_less(e_bayes, e_mle);
        json hist = json::object();
        for (const auto &[name, errors] : {std::pair{"mle", &e_mle}, std::pair{"bayes", &e_bayes}}) {
            const Histogram h = empirical_pdf(*errors, a.bins);
            json bins = json::array();
            for (std::size_t i = 0; i < h.densities.size(); ++i) {
                bins.push_back({h.edges[i], h.edges[i + 1], h.densities[i]});
                hist_csv << to_string(norm) << ',' << name << ',' << format_number(h.edges[i], 17) << ','
                         << format_number(h.edges[i + 1], 17) << ',' << format_number(h.densities[i], 17) << '\n';
            }
            hist[name] = bins;
        }
        norms[to_string(norm)] = {{"median_mle", median(e_mle)},
                                  {"median_bayes", median(e_bayes)},
                                  {"sign_test", {{"bayes_smaller", sign.wins}, {"bayes_larger", sign.losses}, {"ties", sign.ties}, {"p_value", sign.p_value}}},
                                  {"signed_rank_p_value", rank.p_value},
                                  {"histogram", hist}};
    }
    if (!a.csv.empty())
        write_text(a.csv, study_csv(result));
    if (!a.hist_csv.empty())
        write_text(a.hist_csv, hist_csv.str());

    json two_state = nullptr;
    if (a.two_state) {
        TwoStateStudyConfig ts;
        ts.p = a.p;
        ts.q = a.q;
        ts.chain_length = a.chain_length;
        ts.n_reps = a.two_state_reps;
        ts.seed = seed;
        const TwoStateStudyResult tr = run_two_state_study(ts);
        const auto mae = [](const std::vector<Eigen::Vector2d> &e) {
            const Eigen::Vector2d m = TwoStateStudyResult::mean_abs_error(e);
            return json{{"p", m(0)}, {"q", m(1)}};
        };
        two_state = {{"p", ts.p}, {"q", ts.q}, {"chain_length", ts.chain_length}, {"reps", ts.n_reps},
                     {"mae_uniform", mae(tr.err_uniform)}, {"mae_beta", mae(tr.err_beta)},
                     {"mae_jeffreys", mae(tr.err_jeffreys)}};
    }

    if (a.out == "csv") {
        out << study_csv(result);
        return kExitOk;
    }
    if (a.out == "table") {
        out << "replicates: " << result.records.size() << " (skipped " << result.n_skipped() << ")\n";
        for (const auto &[name, n] : norms.items())
            out << name << ": median error MLE " << fixed4(n["median_mle"].get<double>()) << ", Bayes "
                << fixed4(n["median_bayes"].get<double>()) << "; Bayes smaller in "
                << n["sign_test"]["bayes_smaller"].get<std::size_t>() << " of "
                << n["sign_test"]["bayes_smaller"].get<std::size_t>() + n["sign_test"]["bayes_larger"].get<std::size_t>()
                << " (sign test p = " << format_number(n["sign_test"]["p_value"].get<double>(), 4) << ")\n";
        if (!two_state.is_null())
            out << "two-state MAE (p, q): uniform " << two_state["mae_uniform"].dump() << ", beta "
                << two_state["mae_beta"].dump() << ", jeffreys " << two_state["mae_jeffreys"].dump() << '\n';
        return kExitOk;
    }
    json reps = json::array();
    for (const auto &rec : result.records) {
        json row = {{"index", rec.index}, {"theta", theta_json(rec.theta_true)}, {"skipped", rec.skipped}};
        if (!rec.skipped)
            row.update({{"theta_mle", theta_json(rec.theta_mle)},
                        {"theta_bayes", theta_json(rec.theta_bayes)},
                        {"err_mle_fro", rec.err_mle_fro},
                        {"err_bayes_fro", rec.err_bayes_fro},
                        {"err_mle_2", rec.err_mle_2},
                        {"err_bayes_2", rec.err_bayes_2},
                        {"acceptance_rate", rec.acceptance_rate}});
        else
            row["skip_reason"] = rec.skip_reason;
        reps.push_back(row);
    }
    report["results"] = {{"n_reps", result.records.size()}, {"n_skipped", result.n_skipped()},
                         {"norms", norms}, {"two_state", two_state}, {"replicates", reps}};
    emit_json(out, report, a.timing, start);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct TwoStateArgs {
    std::int64_t n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    bool jeffreys = false;
    std::size_t iters = 20000;
    double sigma = 0.1;
    std::optional<std::uint64_t> seed;
    std::string out = "json";
};

int cmd_two_state(const TwoStateArgs &a, std::ostream &out) {
    check_choice(a.out, {"json", "table"}, "--out");
    const TwoStateCounts counts{a.n00, a.n01, a.n10, a.n11};
    const TwoStateEstimates e = two_state_estimators(counts);
    json report = make_report("two-state");
    report["config"] = {{"n00", a.n00}, {"n01", a.n01}, {"n10", a.n10}, {"n11", a.n11}};
    json mle_json = {{"p", e.p_mle ? json(*e.p_mle) : json(nullptr)},
                     {"q", e.q_mle ? json(*e.q_mle) : json(nullptr)}};
    if (!e.p_mle)
        report["warnings"].push_back("p is unidentifiable by maximum likelihood (no transitions out of 0)");
    if (!e.q_mle)
        report["warnings"].push_back("q is unidentifiable by maximum likelihood (no transitions out of 1)");
    report["results"] = {{"uniform", {{"p", e.p_uniform}, {"q", e.q_uniform}}},
                         {"beta_half", {{"p", e.p_beta}, {"q", e.q_beta}}},
                         {"mle", mle_json}};
    if (a.jeffreys) {
        const std::uint64_t seed = resolve_seed(a.seed);
        BasicMcmcConfig<2> cfg{a.sigma, a.iters, a.iters / 10, seed, Eigen::Vector2d(e.p_beta, e.q_beta)};
        const Eigen::Vector2d j = two_state_jeffreys_estimate(counts, cfg);
        report["config"].update({{"iters", a.iters}, {"sigma", a.sigma}, {"seed", seed}});
        report["results"]["jeffreys"] = {{"p", j(0)}, {"q", j(1)}};
    }
    if (a.out == "table") {
        out << "prior        p         q\n";
        for (const char *name : {"uniform", "beta_half", "mle", "jeffreys"}) {
            if (!report["results"].contains(name))
                continue;
            const json &r = report["results"][name];
            out << std::left << std::setw(10) << name << std::right;
            for (const char *k : {"p", "q"})
                out << "  " << (r[k].is_null() ? "      NA" : fixed4(r[k].get<double>()));
            out << '\n';
        }
        return kExitOk;
    }
    out << report.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Constrained four-state Markov chain toolkit for year x parcel panels"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto *estimate = app.add_subcommand("estimate", "Fit theta by maximum likelihood or posterior mean");
    estimate->add_option("panel", est.input, "Grid or CSV panel file")->required();
    estimate->add_option("--prior", est.prior, "mle | jeffreys | uniform");
    estimate->add_option("--iters", est.mcmc.iters, "MCMC iterations");
    estimate->add_option("--sigma", est.mcmc.sigma, "Proposal standard deviation per coordinate");
    estimate->add_option("--burn-in", est.mcmc.burn_in, "Burn-in iterations (default 10% of --iters)");
    estimate->add_option("--seed", est.seed, "Random seed (default $MARKOV_PANEL_SEED, else 1)");
    estimate->add_option("--out", est.out, "json | csv | table");
    estimate->add_option("--trace", est.trace, "Write post-burn-in MCMC samples to this CSV");
    estimate->add_flag("--timing", est.timing, "Add wall-clock timing to the JSON report");

    AnalyzeArgs ana;
    auto *analyze = app.add_subcommand("analyze", "First-passage law, hitting times and quasi-stationary distribution");
    analyze->add_option("input", ana.input, "JSON with 'theta' or 'matrix', or a panel file")->required();
    analyze->add_option("--estimator", ana.estimator, "mle | jeffreys | uniform (panel input)");
    analyze->add_option("--iters", ana.mcmc.iters, "MCMC iterations (panel input)");
    analyze->add_option("--sigma", ana.mcmc.sigma, "Proposal standard deviation (panel input)");
    analyze->add_option("--burn-in", ana.mcmc.burn_in, "Burn-in iterations (panel input)");
    analyze->add_option("--seed", ana.seed, "Random seed");
    analyze->add_option("--horizon", ana.horizon, "Number of first-passage probabilities to compute");
    analyze->add_option("--from", ana.from, "Source state");
    analyze->add_option("--to", ana.to, "Target state");
    analyze->add_option("--pmf-csv", ana.pmf_csv, "Write the first-passage pmf (n,f) to this CSV");
    analyze->add_option("--out", ana.out, "json | csv | table");
    analyze->add_flag("--timing", ana.timing, "Add wall-clock timing to the JSON report");

    GofArgs gof;
    auto *gof_cmd = app.add_subcommand("gof", "Geometric holding-time goodness of fit (parametric bootstrap)");
    gof_cmd->add_option("panel", gof.input, "Grid or CSV panel file")->required();
    gof_cmd->add_option("--state", gof.state, "F | C | J");
    gof_cmd->add_option("--reps", gof.reps, "Bootstrap replicates M");
    gof_cmd->add_option("--alpha", gof.alpha, "Rejection threshold");
    gof_cmd->add_option("--variant", gof.variant, "pmf | cdf distance");
    gof_cmd->add_option("--seed", gof.seed, "Random seed");
    gof_cmd->add_option("--boot-csv", gof.boot_csv, "Write the bootstrap statistics to this CSV");
    gof_cmd->add_option("--out", gof.out, "json | csv | table");
    gof_cmd->add_flag("--timing", gof.timing, "Add wall-clock timing to the JSON report");

    SimulateArgs sim;
    auto *simulate = app.add_subcommand("simulate", "MLE versus Jeffreys-Bayes error study on simulated panels");
    simulate->add_option("--reps", sim.reps, "Replicates L");
    simulate->add_flag("--full", sim.full, "Run L = 1000 replicates");
    simulate->add_option("--parcels", sim.parcels, "Parcels P per panel");
    simulate->add_option("--years", sim.years, "Years N per panel");
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("--iters", sim.iters, "MCMC iterations per replicate");
    simulate->add_option("--sigma", sim.sigma, "Proposal standard deviation");
    simulate->add_option("--burn-in", sim.burn_in, "Burn-in iterations (default 10% of --iters)");
    simulate->add_option("--threads", sim.threads, "Worker threads");
    simulate->add_option("--bins", sim.bins, "Histogram bins");
    simulate->add_option("--csv", sim.csv, "Write one row per replicate to this CSV");
    simulate->add_option("--hist-csv", sim.hist_csv, "Write error histograms to this CSV");
    simulate->add_flag("--two-state", sim.two_state, "Also run the two-state prior comparison");
    simulate->add_option("--p", sim.p, "Two-state P(0->1)");
    simulate->add_option("--q", sim.q, "Two-state P(1->0)");
    simulate->add_option("--chain-length", sim.chain_length, "Two-state transitions per chain");
    simulate->add_option("--two-state-reps", sim.two_state_reps, "Two-state replicates");
    simulate->add_option("--out", sim.out, "json | csv | table");
    simulate->add_flag("--timing", sim.timing, "Add wall-clock timing to the JSON report");

    TwoStateArgs ts;
    auto *two_state = app.add_subcommand("two-state", "Closed-form two-state estimators from transition counts");
    two_state->add_option("--n00", ts.n00, "Count of 0 -> 0 transitions")->required();
    two_state->add_option("--n01", ts.n01, "Count of 0 -> 1 transitions")->required();
    two_state->add_option("--n10", ts.n10, "Count of 1 -> 0 transitions")->required();
    two_state->add_option("--n11", ts.n11, "Count of 1 -> 1 transitions")->required();
    two_state->add_flag("--jeffreys", ts.jeffreys, "Add the Jeffreys-prior posterior mean (MCMC)");
    two_state->add_option("--iters", ts.iters, "MCMC iterations");
    two_state->add_option("--sigma", ts.sigma, "Proposal standard deviation");
    two_state->add_option("--seed", ts.seed, "Random seed");
    two_state->add_option("--out", ts.out, "json | table");

    std::vector<const char *> argv;
    argv.reserve(args.size());
    for (const auto &a : args)
        argv.push_back(a.c_str());
    if (argv.empty())
        argv.push_back("markov_panel");

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        return kExitInput;
    }

    try {
        if (estimate->parsed())
            return cmd_estimate(est, out);
        if (analyze->parsed())
            return cmd_analyze(ana, out);
        if (gof_cmd->parsed())
            return cmd_gof(gof, out);
        if (simulate->parsed())
            return cmd_simulate(sim, out);
        if (two_state->parsed())
            return cmd_two_state(ts, out);
    } catch (const DegenerateCounts &e) {
        err << "error: degenerate data: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const EmptySample &e) {
        err << "error: empty sample: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const Unreachable &e) {
        err << "error: unreachable: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const DegenerateBlock &e) {
        err << "error: degenerate block: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const BoundaryTheta &e) {
        err << "error: boundary parameter: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const EmptyTrace &e) {
        err << "error: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const ParseError &e) {
        err << "error: input: " << e.what() << '\n';
        return kExitInput;
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const nlohmann::json::exception &e) {
        err << "error: input: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}

} // namespace markov_panel::cli
