#include "sipkit/harness.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "sipkit/condexp.hpp"
#include "sipkit/coupling.hpp"
#include "sipkit/kmt.hpp"
#include "sipkit/rates.hpp"
#include "sipkit/rosenthal.hpp"

namespace sipkit {

namespace {

constexpr const char* kToolVersion = "0.1.0";

const std::set<std::string> kKinds{"coeffs",       "rosenthal-check", "kmt-pipeline",
                                   "rates",        "sigma2",          "bounds-compare"};

// --- JSON access with pointer-tagged errors ----------------------------------

void allow_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(where, "expected an object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + "/" + k, "unknown key");
}

double num(const Json& j, const std::string& key, const std::string& where,
           std::optional<double> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        throw ConfigError(where + "/" + key, "missing required number");
    }
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "/" + key, "expected a number");
    return v.get<double>();
}

long long integer(const Json& j, const std::string& key, const std::string& where,
                  std::optional<long long> def = std::nullopt, long long lo = 0,
                  long long hi = (1LL << 40)) {
    if (!j.contains(key)) {
        if (def) return *def;
        throw ConfigError(where + "/" + key, "missing required integer");
    }
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "/" + key, "expected an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > hi)
        throw ConfigError(where + "/" + key,
                          "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

bool boolean(const Json& j, const std::string& key, const std::string& where, bool def) {
    if (!j.contains(key)) return def;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "/" + key, "expected a boolean");
    return j.at(key).get<bool>();
}

std::vector<double> num_list(const Json& j, const std::string& key, const std::string& where,
                             std::vector<double> def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array() || v.empty())
        throw ConfigError(where + "/" + key, "expected a number or a non-empty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ConfigError(where + "/" + key + "/" + std::to_string(i), "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<int> int_list(const Json& j, const std::string& key, const std::string& where,
                          std::vector<int> def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (v.is_number_integer()) return {v.get<int>()};
    if (!v.is_array() || v.empty())
        throw ConfigError(where + "/" + key, "expected an integer or a non-empty array");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer())
            throw ConfigError(where + "/" + key + "/" + std::to_string(i), "expected an integer");
        out.push_back(v[i].get<int>());
    }
    return out;
}

std::vector<std::string> str_list(const Json& j, const std::string& key, const std::string& where,
                                  std::vector<std::string> def) {
    if (!j.contains(key)) return def;
    const auto& v = j.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array() || v.empty())
        throw ConfigError(where + "/" + key, "expected a string or a non-empty array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string())
            throw ConfigError(where + "/" + key + "/" + std::to_string(i), "expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

std::string str(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw ConfigError(where + "/" + key, "missing required string");
    return j.at(key).get<std::string>();
}

NoiseSpec noise_from_json(const Json& j, const std::string& where) {
    const auto law = str(j, "law", where);
    if (law == "two-point") {
        allow_keys(j, where, {"law", "scale"});
        return NoiseSpec::two_point(num(j, "scale", where, 1.0));
    }
    if (law == "uniform") {
        allow_keys(j, where, {"law", "lo", "hi"});
        return NoiseSpec::uniform(num(j, "lo", where), num(j, "hi", where));
    }
    if (law == "gaussian") {
        allow_keys(j, where, {"law", "mean", "sd"});
        return NoiseSpec::gaussian(num(j, "mean", where, 0.0), num(j, "sd", where, 1.0));
    }
    if (law == "finite") {
        allow_keys(j, where, {"law", "symbols", "probabilities"});
        FiniteAlphabet a;
        a.probabilities = num_list(j, "probabilities", where, {});
        if (!j.contains("symbols") || !j.at("symbols").is_array())
            throw ConfigError(where + "/symbols", "expected an array");
        for (const auto& s : j.at("symbols")) {
            if (s.is_number())
                a.symbols.push_back({s.get<double>()});
            else if (s.is_array())
                a.symbols.push_back(s.get<std::vector<double>>());
            else
                throw ConfigError(where + "/symbols", "symbols must be numbers or vectors");
        }
        NoiseSpec n(a);
        n.validate();
        return n;
    }
    throw ConfigError(where + "/law", "unknown noise law '" + law + "'");
}

template <typename F>
auto guarded(const std::string& where, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const SpecError& e) {
        throw ConfigError(where, e.what());
    }
}

// --- artifacts ----------------------------------------------------------------------

struct Verdict {
    std::string name;
    bool holds = true;
    std::string record;
};

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }
    template <typename... Ts>
    std::size_t row(const Ts&... v) {
        std::vector<std::string> cells{cell(v)...};
        row_strings(cells);
        return ++rows_ + 1;  // line number in the file (header is line 1)
    }
    const std::string& text() const { return text_; }

private:
    static std::string cell(double x) { return format_double(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(long x) { return std::to_string(x); }
    static std::string cell(long long x) { return std::to_string(x); }
    static std::string cell(unsigned long x) { return std::to_string(x); }
    static std::string cell(bool x) { return x ? "true" : "false"; }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    void row_strings(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }
    std::size_t cols_;
    std::size_t rows_ = 0;
    std::string text_;
};

struct Context {
    Json config;
    Json params;
    std::uint64_t seed = 0;
    int workers = 1;
    std::map<std::string, std::string> files;
    std::vector<Verdict> verdicts;
    Json results = Json::object();

    void verdict(std::string name, bool holds, std::string record) {
        verdicts.push_back({std::move(name), holds, std::move(record)});
    }
};

Json opt_num(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

std::string rec(const std::string& file, std::size_t line) {
    return file + ":" + std::to_string(line);
}

// --- validation of the parameter blocks ---------------------------------------------

void validate_params(const std::string& kind, const Json& p) {
    const std::string w = "/params";
    if (kind == "coeffs") {
        allow_keys(p, w, {"n_max", "p", "kinds", "budget", "wu_vs_star", "pathwise", "pathwise_pairs"});
        integer(p, "n_max", w, 10, 1, 4096);
        for (double q : num_list(p, "p", w, {2.0}))
            if (!(q >= 1.0)) throw ConfigError(w + "/p", "p must be >= 1");
        for (const auto& k : str_list(p, "kinds", w, {"star"})) guarded(w + "/kinds", [&] { return parse_kind(k); });
        integer(p, "budget", w, 20000, 1000);
        integer(p, "pathwise_pairs", w, 10000, 1);
    } else if (kind == "rosenthal-check") {
        allow_keys(p, w, {"d", "paths", "p", "modes", "mc_budget", "moment", "cp"});
        for (int d : int_list(p, "d", w, {4}))
            if (d < 0 || d > 12) throw ConfigError(w + "/d", "d must lie in [0, 12]");
        integer(p, "paths", w, 1000, 2);
        for (double q : num_list(p, "p", w, {3.0}))
            if (!(q >= 2.0)) throw ConfigError(w + "/p", "p must be >= 2");
        for (const auto& m : str_list(p, "modes", w, {"default", "strict"}))
            if (m != "default" && m != "strict") throw ConfigError(w + "/modes", "modes are 'default' or 'strict'");
        integer(p, "mc_budget", w, 1000, 1000);
        if (p.contains("cp") && !(num(p, "cp", w) > 0.0)) throw ConfigError(w + "/cp", "must be > 0");
    } else if (kind == "kmt-pipeline") {
        allow_keys(p, w, {"p", "beta", "k_max", "ensemble", "window_ensemble", "mc_budget", "r", "alpha",
                          "sigma_lags", "sigma_ensemble", "sigma", "blw", "gm", "delta_prime"});
        const double pp = num(p, "p", w, 3.0);
        const double b = num(p, "beta", w, 1.0);
        const int km = static_cast<int>(integer(p, "k_max", w, 8, 1, 10));
        const auto s = guarded(w, [&] { return make_schedule(pp, b, km); });
        if (s.k0 == 0) throw ConfigError(w + "/k_max", "no k <= k_max satisfies the k0 rule");
        integer(p, "ensemble", w, 20000, 2);
        integer(p, "window_ensemble", w, 400, 2);
        integer(p, "mc_budget", w, 1000, 1000);
        integer(p, "sigma_lags", w, 16, 0, 4096);
        integer(p, "sigma_ensemble", w, 100000, 100);
        if (p.contains("r") && num(p, "r", w) != 0.0 && !(num(p, "r", w) > 2.0))
            throw ConfigError(w + "/r", "r must be > 2");
        if (p.contains("alpha") && num(p, "alpha", w) != 0.0 && !(num(p, "alpha", w) >= 1.0))
            throw ConfigError(w + "/alpha", "alpha must be >= 1");
        if (p.contains("gm")) {
            const auto& g = p.at("gm");
            allow_keys(g, w + "/gm", {"n", "M", "budget", "p"});
            for (int n : int_list(g, "n", w + "/gm", {4}))
                if (n < 1 || n > 24) throw ConfigError(w + "/gm/n", "n must lie in [1, 24]");
            if (!(num(g, "M", w + "/gm", 2.0) > 0.0)) throw ConfigError(w + "/gm/M", "M must be > 0");
            integer(g, "budget", w + "/gm", 20000, 1000);
            if (!(num(g, "p", w + "/gm", pp) > 2.0)) throw ConfigError(w + "/gm/p", "p must be > 2");
        }
        if (p.contains("delta_prime")) {
            const auto& d = p.at("delta_prime");
            allow_keys(d, w + "/delta_prime", {"c", "gamma", "r"});
            if (num(d, "c", w + "/delta_prime", 1.0) < 0.0) throw ConfigError(w + "/delta_prime/c", "must be >= 0");
            num(d, "gamma", w + "/delta_prime");
            if (!(num(d, "r", w + "/delta_prime") > pp)) throw ConfigError(w + "/delta_prime/r", "r must exceed p");
        }
    } else if (kind == "rates") {
        allow_keys(p, w, {"p", "gamma", "beta_mod", "oracle", "oracle_step"});
        for (double q : num_list(p, "p", w, {}))
            if (!(q > 2.0)) throw ConfigError(w + "/p", "p must be > 2");
        for (double g : num_list(p, "gamma", w, {1.0}))
            if (!(g > 0.0)) throw ConfigError(w + "/gamma", "gamma must be > 0");
        for (double b : num_list(p, "beta_mod", w, {1.0}))
            if (!(b > 0.0 && b <= 1.0)) throw ConfigError(w + "/beta_mod", "beta_mod must lie in (0, 1]");
        if (!(num(p, "oracle_step", w, 0.005) > 0.0)) throw ConfigError(w + "/oracle_step", "must be > 0");
    } else if (kind == "sigma2") {
        allow_keys(p, w, {"lags", "ensemble", "batch_length", "expected"});
        integer(p, "lags", w, 16, 0, 4096);
        integer(p, "ensemble", w, 100000, 100);
        integer(p, "batch_length", w, 256, 1, 1 << 20);
    } else if (kind == "bounds-compare") {
        allow_keys(p, w, {"n_max", "p", "budget"});
        integer(p, "n_max", w, 10, 1, 4096);
        for (double q : num_list(p, "p", w, {2.0}))
            if (!(q >= 1.0)) throw ConfigError(w + "/p", "p must be >= 1");
        integer(p, "budget", w, 20000, 1000);
    }
}

bool needs_model(const std::string& kind) { return kind != "rates"; }

// --- experiment kinds ---------------------------------------------------------------

void run_coeffs(Context& c, const Model& model) {
    const auto& P = c.params;
    const int n_max = static_cast<int>(integer(P, "n_max", "", 10));
    const auto ps = num_list(P, "p", "", {2.0});
    const auto kinds = str_list(P, "kinds", "", {"star"});
    const auto budget = static_cast<std::size_t>(integer(P, "budget", "", 20000));
    Csv csv({"kind", "n", "p", "estimate", "ci", "se", "samples", "analytic_bound", "bound_name",
             "holds"});
    Json rows = Json::array();
    for (const auto& kname : kinds) {
        const auto kind = parse_kind(kname);
        for (double p : ps) {
            const int n_lo = kind == CoefficientKind::Markov ? 0 : 1;
            for (int n = n_lo; n <= n_max; ++n) {
                const auto e = estimate_coefficient(model, n, p, kind, budget,
                                                    derive_seed(c.seed, "coeffs-" + kname), c.workers);
                const bool holds = !e.analytic_bound ||
                                   e.estimate - e.ci <= *e.analytic_bound * (1.0 + 1e-12) + 1e-15;
                const auto line = csv.row(kname, n, p, e.estimate, e.ci, e.se,
                                          static_cast<unsigned long>(e.samples),
                                          e.analytic_bound ? format_double(*e.analytic_bound) : std::string(""),
                                          e.bound_name, holds);
                if (e.analytic_bound)
                    c.verdict("coeff " + kname + " n=" + std::to_string(n) + " p=" + format_double(p) +
                                  " within " + e.bound_name,
                              holds, rec("coeffs.csv", line));
                rows.push_back({{"kind", kname}, {"n", n}, {"p", p}, {"estimate", e.estimate},
                                {"ci", e.ci}, {"samples", e.samples}, {"bound", opt_num(e.analytic_bound)}});
            }
        }
    }
    c.files["coeffs.csv"] = csv.text();
    c.results["coefficients"] = rows;

    if (boolean(P, "wu_vs_star", "", false)) {
        Csv ws({"n", "p", "wu", "wu_se", "star", "star_se", "slack", "holds"});
        for (double p : ps) {
            for (const auto& r : check_wu_vs_star(model, n_max, p, budget,
                                                  derive_seed(c.seed, "wu-star"), c.workers)) {
                const auto line = ws.row(r.n, p, r.wu.estimate, r.wu.se, r.star.estimate, r.star.se,
                                         r.slack, r.holds);
                c.verdict("wu <= 2 star n=" + std::to_string(r.n) + " p=" + format_double(p), r.holds,
                          rec("wu_vs_star.csv", line));
            }
        }
        c.files["wu_vs_star.csv"] = ws.text();
    }
    if (boolean(P, "pathwise", "", false)) {
        const auto pairs = static_cast<std::size_t>(integer(P, "pathwise_pairs", "", 10000));
        const auto r = pathwise_affine_check(model, n_max, pairs, derive_seed(c.seed, "pathwise"),
                                             c.workers);
        c.results["pathwise"] = {{"checked", r.checked}, {"violations", r.violations},
                                 {"worst_margin", r.worst_margin}};
        c.verdict("pathwise affine bound", r.violations == 0, "summary.json:/results/pathwise");
    }
}

void run_rosenthal(Context& c, const Model& model) {
    const auto& P = c.params;
    const auto ds = int_list(P, "d", "", {4});
    const auto paths = static_cast<std::size_t>(integer(P, "paths", "", 1000));
    const auto ps = num_list(P, "p", "", {3.0});
    const auto modes = str_list(P, "modes", "", {"default", "strict"});
    const auto budget = static_cast<std::size_t>(integer(P, "mc_budget", "", 1000));
    const bool moment = boolean(P, "moment", "", true);
    std::optional<double> cp;
    if (P.contains("cp")) cp = num(P, "cp", "");

    std::string jsonl;
    std::size_t jl = 0;
    Csv mom({"d", "p", "mode", "cp", "lhs", "lhs_se", "rhs_25", "rhs_26", "rhs_27", "margin",
             "margin_delta0", "holds"});
    Json levels = Json::array();
    for (int d : ds) {
        const auto dec = build_decomposition(model, d, paths, derive_seed(c.seed, "rosenthal-d" + std::to_string(d)),
                                             c.workers, budget);
        auto v = verify_pointwise(dec);
        verify_telescoping(dec, v);
        std::size_t ok_pw = 0, ok_tel = 0;
        std::string first_fail;
        for (const auto& r : v) {
            Json line = {{"d", d},
                         {"path_id", r.path_id},
                         {"margin_pointwise", r.margin_pointwise},
                         {"telescoping_error", r.margin_telescoping},
                         {"slack", r.slack},
                         {"pointwise_ok", r.pointwise_ok},
                         {"telescoping_ok", r.telescoping_ok},
                         {"provenance", dec.exact ? "exact" : "mc"}};
            jsonl += line.dump() + "\n";
            ++jl;
            ok_pw += r.pointwise_ok;
            ok_tel += r.telescoping_ok;
            if (first_fail.empty() && !(r.pointwise_ok && r.telescoping_ok))
                first_fail = rec("rosenthal_paths.jsonl", jl);
        }
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& r : v) worst = std::min(worst, r.margin_pointwise);
        c.verdict("pointwise inequality d=" + std::to_string(d), ok_pw == v.size(),
                  first_fail.empty() ? "rosenthal_paths.jsonl" : first_fail);
        c.verdict("telescoping identity d=" + std::to_string(d), ok_tel == v.size(),
                  first_fail.empty() ? "rosenthal_paths.jsonl" : first_fail);
        Json lv = {{"d", d}, {"paths", v.size()}, {"pointwise_ok", ok_pw}, {"telescoping_ok", ok_tel},
                   {"worst_pointwise_margin", worst}, {"exact", dec.exact}};
        if (moment) {
            for (double p : ps) {
                for (const auto& mode : modes) {
                    const auto r = verify_moment_bound(model, dec, p, mode == "strict", cp);
                    const auto line = mom.row(d, p, mode, r.constants.cp, r.lhs, r.lhs_se, r.rhs.rhs_25,
                                              r.rhs.rhs_26, r.rhs.rhs_27, r.margin, r.margin_delta0,
                                              r.holds);
                    c.verdict("moment bound d=" + std::to_string(d) + " p=" + format_double(p) + " " + mode,
                              r.holds, rec("rosenthal_moment.csv", line));
                }
            }
        }
        levels.push_back(lv);
    }
    c.files["rosenthal_paths.jsonl"] = jsonl;
    if (moment) c.files["rosenthal_moment.csv"] = mom.text();
    c.results["decompositions"] = levels;
}

void write_conditions(Csv& csv, const ConditionReport& r) {
    for (const auto& row : r.rows)
        csv.row(r.name, row.k, row.summand, row.se, row.cumulative, r.slope, r.verdict, r.label);
}

void run_kmt(Context& c, const Model& model) {
    const auto& P = c.params;
    const double p = num(P, "p", "", 3.0);
    const auto s = make_schedule(p, num(P, "beta", "", 1.0), static_cast<int>(integer(P, "k_max", "", 8)));
    Csv sch({"k", "M_k", "m_k", "growth_ratio", "ell_k"});
    const auto growth = schedule_growth_ratio(s);
    for (int k = 1; k <= s.k_max; ++k) {
        const double ell = k >= 2 ? std::pow(3.0, k * (p - 2.0) / (2.0 * p)) / std::sqrt(std::log(k)) : 0.0;
        sch.row(k, s.level(k), s.block(k), growth[static_cast<std::size_t>(k - 1)], ell);
    }
    c.files["kmt_schedule.csv"] = sch.text();
    c.results["schedule"] = {{"p", s.p}, {"beta", s.beta}, {"k_max", s.k_max}, {"k0", s.k0}};

    Csv cond({"condition", "k", "summand", "se", "cumulative", "slope", "verdict", "label"});
    if (boolean(P, "blw", "", true)) {
        BlwOptions o;
        o.alpha = num(P, "alpha", "", 0.0);
        o.r = num(P, "r", "", 0.0);
        o.ensemble = static_cast<std::size_t>(integer(P, "ensemble", "", 20000));
        o.window_ensemble = static_cast<std::size_t>(integer(P, "window_ensemble", "", 400));
        o.mc_budget = static_cast<std::size_t>(integer(P, "mc_budget", "", 1000));
        o.sigma_lags = static_cast<int>(integer(P, "sigma_lags", "", 16));
        o.sigma_ensemble = static_cast<std::size_t>(integer(P, "sigma_ensemble", "", 100000));
        if (P.contains("sigma")) o.sigma = num(P, "sigma", "");
        const auto rep = check_blw_conditions(model, s, o, c.seed, c.workers);
        Csv nu({"k", "m_k", "nu", "se", "sigma2"});
        for (std::size_t i = 0; i < rep.nu.size(); ++i)
            nu.row(s.k0 + static_cast<int>(i), s.block(s.k0 + static_cast<int>(i)), rep.nu[i].mean,
                   rep.nu[i].se, rep.sigma * rep.sigma);
        c.files["kmt_nu.csv"] = nu.text();
        Json conds = Json::array();
        for (const auto& r : rep.conditions) {
            write_conditions(cond, r);
            conds.push_back({{"name", r.name}, {"slope", r.slope}, {"verdict", r.verdict},
                             {"label", r.label}});
            c.verdict("blw " + r.name + " (" + std::string(kFiniteKLabel) + ")", r.convergent,
                      "kmt_conditions.csv");
        }
        c.results["blw"] = {{"sigma", rep.sigma}, {"sigma_se", rep.sigma_se}, {"conditions", conds},
                            {"variance_reduction", "common random numbers across k"}};
    }
    if (P.contains("delta_prime")) {
        const auto& d = P.at("delta_prime");
        const auto rep = check_delta_prime_conditions(PowerLawDecay{num(d, "c", "", 1.0), num(d, "gamma", "")},
                                                      s, num(d, "r", ""));
        Json conds = Json::array();
        for (const auto& r : rep.conditions) {
            write_conditions(cond, r);
            conds.push_back({{"name", r.name}, {"verdict", r.verdict}});
        }
        c.results["delta_prime"] = {{"all_convergent", rep.all_convergent}, {"label", rep.label},
                                    {"conditions", conds}};
        c.verdict("delta' conditions (" + rep.label + ")", rep.all_convergent, "kmt_conditions.csv");
    }
    c.files["kmt_conditions.csv"] = cond.text();
    if (P.contains("gm")) {
        const auto& g = P.at("gm");
        Csv gm({"n", "M", "p", "delta_prime", "delta_prime_ci", "epsilon", "lhs", "lhs_se", "rhs",
                "inner_exact", "holds"});
        const double gp = num(g, "p", "", p);
        for (int n : int_list(g, "n", "", {4})) {
            const auto r = gM_projection_check(model, n, num(g, "M", "", 2.0), gp,
                                               static_cast<std::size_t>(integer(g, "budget", "", 20000)),
                                               derive_seed(c.seed, "gm-" + std::to_string(n)), c.workers);
            const auto line = gm.row(n, r.M, r.p, r.delta_prime, r.delta_prime_ci, r.epsilon, r.lhs,
                                     r.lhs_se, r.rhs, r.inner_exact, r.holds);
            c.verdict("g_M projection n=" + std::to_string(n), r.holds, rec("kmt_gm.csv", line));
        }
        c.files["kmt_gm.csv"] = gm.text();
    }
}

void run_rates(Context& c) {
    const auto& P = c.params;
    const auto ps = num_list(P, "p", "", {});
    if (ps.empty()) throw ConfigError("/params/p", "missing required number");
    const auto gs = num_list(P, "gamma", "", {1.0});
    const bool oracle = boolean(P, "oracle", "", false);
    const double step = num(P, "oracle_step", "", 0.005);
    Csv csv({"p", "gamma", "kappa", "tau", "quadratic", "feasible", "beta", "r", "reason", "oracle"});
    Json certs = Json::array();
    for (double p : ps) {
        for (double g : gs) {
            const auto cert = feasibility(p, g);
            Json j = {{"p", p}, {"gamma", g}, {"kappa", cert.kappa}, {"tau", cert.tau},
                      {"feasible", cert.feasible}, {"quadratic", cert.quadratic}};
            j["witness"] = cert.witness ? Json{{"beta", cert.witness->beta}, {"r", cert.witness->r}}
                                        : Json(nullptr);
            if (!cert.feasible) j["reason"] = cert.reason;
            std::string orc;
            if (oracle) {
                const bool o = feasibility_grid_search(p, g, step);
                orc = o ? "true" : "false";
                j["oracle"] = o;
            }
            const auto line = csv.row(p, g, cert.kappa, cert.tau, cert.quadratic, cert.feasible,
                                      cert.witness ? format_double(cert.witness->beta) : std::string(""),
                                      cert.witness ? format_double(cert.witness->r) : std::string(""),
                                      cert.reason, orc);
            bool consistent = !cert.feasible || (cert.witness && witness_valid(p, g, *cert.witness));
            if (oracle) consistent = consistent && orc == (cert.feasible ? "true" : "false");
            c.verdict("certificate p=" + format_double(p) + " gamma=" + format_double(g), consistent,
                      rec("rates.csv", line));
            certs.push_back(j);
        }
    }
    c.files["rates.csv"] = csv.text();
    c.results["certificates"] = certs;

    Csv th({"p", "beta_mod", "blw_small_p", "blw_large_p", "blw", "new_threshold", "new_below_blw"});
    for (double p : ps) {
        for (double b : num_list(P, "beta_mod", "", {1.0})) {
            const auto t = linear_thresholds(p, b);
            const auto line = th.row(p, b, t.blw_small_p, t.blw_large_p, t.blw, t.new_threshold,
                                     t.new_below_blw);
            c.verdict("new threshold < blw p=" + format_double(p) + " beta=" + format_double(b),
                      t.new_below_blw, rec("thresholds.csv", line));
        }
    }
    c.files["thresholds.csv"] = th.text();
}

void run_sigma2(Context& c, const Model& model) {
    const auto& P = c.params;
    const auto r = sigma2(model, static_cast<int>(integer(P, "lags", "", 16)),
                          static_cast<std::size_t>(integer(P, "ensemble", "", 100000)), c.seed,
                          c.workers, static_cast<int>(integer(P, "batch_length", "", 256)));
    Csv csv({"estimator", "value", "se", "lag_cutoff", "batch_length", "tail_bound", "tail_certified"});
    csv.row("series", r.series.mean, r.series.se, r.lag_cutoff, r.batch_length, r.tail_bound,
            r.tail_certified);
    csv.row("batch-means", r.batch.mean, r.batch.se, r.lag_cutoff, r.batch_length, r.tail_bound,
            r.tail_certified);
    c.files["sigma2.csv"] = csv.text();
    c.results["sigma2"] = {{"series", r.series.mean},   {"series_se", r.series.se},
                           {"batch", r.batch.mean},     {"batch_se", r.batch.se},
                           {"tail_bound", r.tail_bound}, {"agree", r.agree}};
    if (!r.warning.empty()) c.results["sigma2"]["warning"] = r.warning;
    c.verdict("series and batch-means agree", r.agree, "sigma2.csv:2");
    if (P.contains("expected")) {
        const double x = num(P, "expected", "");
        c.verdict("series matches expected", std::abs(r.series.mean - x) <= 3.0 * r.series.se + r.tail_bound,
                  "sigma2.csv:2");
        c.verdict("batch-means matches expected", std::abs(r.batch.mean - x) <= 3.0 * r.batch.se + x / r.batch_length,
                  "sigma2.csv:3");
    }
}

void run_bounds(Context& c, const Model& model) {
    const auto& P = c.params;
    const int n_max = static_cast<int>(integer(P, "n_max", "", 10));
    const auto budget = static_cast<std::size_t>(integer(P, "budget", "", 20000));
    Csv csv({"n", "p", "kind", "estimate", "ci", "bound", "bound_name", "ratio", "holds"});
    std::vector<CoefficientKind> kinds{CoefficientKind::Star};
    if (std::holds_alternative<LinearProcess>(model.family)) kinds.push_back(CoefficientKind::Wu);
    for (double p : num_list(P, "p", "", {2.0})) {
        for (auto kind : kinds) {
            const auto table = sample_differences(model, kind, n_max, budget,
                                                  derive_seed(c.seed, "bounds-" + kind_name(kind)), c.workers);
            for (int n = 1; n <= n_max; ++n) {
                auto e = estimate_from_table(model, table, n, p, kind);
                const auto b = analytic_bound(model, n, p, kind);
                if (!b) continue;
                const bool holds = e.estimate - e.ci <= b->first * (1.0 + 1e-12) + 1e-15;
                const double ratio = b->first > 0.0 ? e.estimate / b->first : 0.0;
                const auto line = csv.row(n, p, kind_name(kind), e.estimate, e.ci, b->first, b->second,
                                          ratio, holds);
                c.verdict(kind_name(kind) + " n=" + std::to_string(n) + " p=" + format_double(p) +
                              " within " + b->second,
                          holds, rec("bounds.csv", line));
            }
        }
    }
    c.files["bounds.csv"] = csv.text();
}

Json verdicts_json(const std::vector<Verdict>& v) {
    Json a = Json::array();
    for (const auto& x : v) a.push_back({{"name", x.name}, {"holds", x.holds}, {"record", x.record}});
    return a;
}

}  // namespace

std::string kind_for_subcommand(const std::string& sub) {
    if (sub == "coeffs") return "coeffs";
    if (sub == "rosenthal") return "rosenthal-check";
    if (sub == "kmt") return "kmt-pipeline";
    if (sub == "rates") return "rates";
    if (sub == "sigma2") return "sigma2";
    if (sub == "compare-bounds") return "bounds-compare";
    throw ConfigError("/kind", "unknown subcommand '" + sub + "'");
}

ProcessFamily family_from_json(const Json& j, const std::string& w) {
    if (!j.is_object()) throw ConfigError(w, "expected an object");
    const auto type = str(j, "type", w);
    return guarded(w, [&]() -> ProcessFamily {
        if (type == "doubling") {
            allow_keys(j, w, {"type"});
            return doubling_map();
        }
        if (type == "torus") {
            allow_keys(j, w, {"type", "matrix", "gamma"});
            if (!j.contains("matrix") || !j.at("matrix").is_array() || j.at("matrix").empty())
                throw ConfigError(w + "/matrix", "expected a square integer matrix");
            const auto rows = j.at("matrix").get<std::vector<std::vector<std::int64_t>>>();
            const auto m = static_cast<Eigen::Index>(rows.size());
            IntMatrix a(m, m);
            for (Eigen::Index r = 0; r < m; ++r) {
                if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != m)
                    throw ConfigError(w + "/matrix", "matrix must be square");
                for (Eigen::Index col = 0; col < m; ++col)
                    a(r, col) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
            }
            std::vector<IntVector> gamma;
            if (j.contains("gamma")) {
                for (const auto& g : j.at("gamma").get<std::vector<std::vector<std::int64_t>>>()) {
                    if (static_cast<Eigen::Index>(g.size()) != m)
                        throw ConfigError(w + "/gamma", "every gamma needs m coordinates");
                    IntVector v(m);
                    for (Eigen::Index i = 0; i < m; ++i) v(i) = g[static_cast<std::size_t>(i)];
                    gamma.push_back(v);
                }
            } else {
                if (m > 2) throw ConfigError(w + "/gamma", "gamma must be given for m > 2");
                gamma = enumerate_gamma(a);
            }
            const auto verdict = validate_gamma(a, gamma);
            if (!verdict.ok) throw ConfigError(w, verdict.reason);
            return TorusEndomorphism(a, gamma);
        }
        if (type == "piecewise-affine") {
            allow_keys(j, w, {"type", "slopes", "intercepts"});
            PiecewiseAffine pa{num_list(j, "slopes", w, {}), num_list(j, "intercepts", w, {})};
            pa.validate();
            return pa;
        }
        if (type == "tent") {
            allow_keys(j, w, {"type"});
            return tent_branches();
        }
        if (type == "linear") {
            allow_keys(j, w, {"type", "coefficients", "power_law", "depth", "noise", "transform"});
            LinearProcess lp;
            if (j.contains("coefficients")) lp.coefficients = num_list(j, "coefficients", w, {});
            if (j.contains("power_law")) {
                const auto& pl = j.at("power_law");
                allow_keys(pl, w + "/power_law", {"scale", "exponent"});
                lp.power_law = PowerLaw{num(pl, "scale", w + "/power_law", 1.0),
                                        num(pl, "exponent", w + "/power_law")};
            }
            if (lp.coefficients.empty() && !lp.power_law)
                throw ConfigError(w, "linear process needs coefficients or power_law");
            lp.depth = static_cast<int>(integer(j, "depth", w, 60, 1, 1 << 16));
            if (j.contains("noise")) lp.noise = noise_from_json(j.at("noise"), w + "/noise");
            if (j.contains("transform")) {
                const auto& t = j.at("transform");
                allow_keys(t, w + "/transform", {"kind", "beta"});
                const auto k = str(t, "kind", w + "/transform");
                if (k == "identity")
                    lp.g = ScalarTransform::identity();
                else if (k == "abs")
                    lp.g = ScalarTransform::absolute();
                else if (k == "signed-power")
                    lp.g = ScalarTransform::signed_power(num(t, "beta", w + "/transform"));
                else
                    throw ConfigError(w + "/transform/kind", "unknown transform '" + k + "'");
            }
            lp.validate();
            return lp;
        }
        if (type == "irf") {
            allow_keys(j, w, {"type", "map", "noise", "base_point", "contraction", "diameter_proxy"});
            IteratedRandomFunction f;
            if (j.contains("map")) {
                const auto& m = j.at("map");
                allow_keys(m, w + "/map", {"kind", "slope"});
                const auto k = str(m, "kind", w + "/map");
                const double s = num(m, "slope", w + "/map", 0.5);
                if (k == "affine")
                    f.map = StateMap::affine(s);
                else if (k == "tanh")
                    f.map = StateMap::tanh_contraction(s);
                else
                    throw ConfigError(w + "/map/kind", "unknown map '" + k + "'");
            }
            if (j.contains("noise")) f.noise = noise_from_json(j.at("noise"), w + "/noise");
            f.base_point = num(j, "base_point", w, 0.0);
            f.diameter_proxy = num(j, "diameter_proxy", w, 1.0);
            if (j.contains("contraction")) {
                const auto& c = j.at("contraction");
                allow_keys(c, w + "/contraction", {"constant", "rho", "alpha"});
                f.contraction = {num(c, "constant", w + "/contraction", 1.0),
                                 num(c, "rho", w + "/contraction", 0.5),
                                 num(c, "alpha", w + "/contraction", 1.0)};
            }
            f.validate();
            return f;
        }
        throw ConfigError(w + "/type", "unknown family type '" + type + "'");
    });
}

Observable observable_from_json(const Json& j, const std::string& w) {
    if (!j.is_object()) throw ConfigError(w, "expected an object");
    const auto type = str(j, "type", w);
    return guarded(w, [&]() -> Observable {
        Observable h;
        if (type == "cosine") {
            allow_keys(j, w, {"type", "k", "amplitude"});
            h = Observable::cosine(static_cast<int>(integer(j, "k", w, 1, -1000000, 1000000)),
                                   num(j, "amplitude", w, 1.0));
        } else if (type == "trig") {
            allow_keys(j, w, {"type", "dim", "terms"});
            TrigPolynomial t;
            t.dim = static_cast<int>(integer(j, "dim", w, 1, 1, 8));
            if (!j.contains("terms") || !j.at("terms").is_array())
                throw ConfigError(w + "/terms", "expected an array");
            for (std::size_t i = 0; i < j.at("terms").size(); ++i) {
                const auto& term = j.at("terms")[i];
                const auto tw = w + "/terms/" + std::to_string(i);
                allow_keys(term, tw, {"frequency", "cos", "sin"});
                TrigTerm tt;
                for (int f : int_list(term, "frequency", tw, {})) tt.frequency.push_back(f);
                if (static_cast<int>(tt.frequency.size()) != t.dim)
                    throw ConfigError(tw + "/frequency", "frequency needs dim entries");
                tt.cos_coef = num(term, "cos", tw, 0.0);
                tt.sin_coef = num(term, "sin", tw, 0.0);
                t.terms.push_back(tt);
            }
            h = Observable(t);
        } else if (type == "piecewise") {
            allow_keys(j, w, {"type", "breakpoints", "pieces"});
            PiecewisePolynomial pp;
            pp.breakpoints = num_list(j, "breakpoints", w, {});
            if (!j.contains("pieces") || !j.at("pieces").is_array())
                throw ConfigError(w + "/pieces", "expected an array of coefficient lists");
            pp.pieces = j.at("pieces").get<std::vector<std::vector<double>>>();
            h = Observable(pp);
        } else if (type == "piecewise-linear") {
            allow_keys(j, w, {"type", "xs", "ys"});
            h = Observable::piecewise_linear(num_list(j, "xs", w, {}), num_list(j, "ys", w, {}));
        } else if (type == "constant") {
            allow_keys(j, w, {"type", "value", "dim"});
            h = Observable::constant(num(j, "value", w), static_cast<int>(integer(j, "dim", w, 1, 1, 8)));
        } else if (type == "identity") {
            allow_keys(j, w, {"type"});
            LipschitzCallable c;
            c.fn = [](std::span<const double> x) { return x[0]; };
            c.lipschitz = 1.0;
            h = Observable(c);
        } else {
            throw ConfigError(w + "/type", "unknown observable type '" + type + "'");
        }
        h.validate();
        return h;
    });
}

Model model_from_config(const Json& config) {
    if (!config.contains("family")) throw ConfigError("/family", "missing family");
    auto family = family_from_json(config.at("family"));
    Observable h;
    if (config.contains("observable"))
        h = observable_from_json(config.at("observable"));
    else if (!std::holds_alternative<LinearProcess>(family))
        throw ConfigError("/observable", "missing observable");
    if (!std::holds_alternative<LinearProcess>(family) && h.dim() != state_dim(family))
        throw ConfigError("/observable", "observable dimension does not match the family");
    const bool center = boolean(config, "center", "", true);
    const std::uint64_t seed = config.contains("seed") ? config.at("seed").get<std::uint64_t>() : 0;
    return guarded("/family", [&] { return make_model(std::move(family), std::move(h), center, seed); });
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string config_hash(const Json& config) {
    const std::string s = config.dump();  // object keys are sorted by nlohmann::json
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunResult run_experiment(const Json& config, const RunOptions& options) {
    RunResult out;
    Context c;
    std::optional<Model> model;
    std::string kind;
    try {
        allow_keys(config, "", {"kind", "seed", "workers", "family", "observable", "center", "params"});
        kind = str(config, "kind", "");
        if (!kKinds.count(kind)) throw ConfigError("/kind", "unknown experiment kind '" + kind + "'");
        if (config.contains("seed") && !config.at("seed").is_number_unsigned())
            throw ConfigError("/seed", "expected an unsigned 64-bit integer");
        c.seed = options.seed ? *options.seed
                              : (config.contains("seed") ? config.at("seed").get<std::uint64_t>() : 0);
        c.workers = options.workers ? *options.workers
                                    : static_cast<int>(integer(config, "workers", "", 1, 1, 1024));
        if (c.workers < 1) throw ConfigError("/workers", "must be >= 1");
        c.params = config.contains("params") ? config.at("params") : Json::object();
        validate_params(kind, c.params);
        if (needs_model(kind)) {
            model = model_from_config(config);
        } else if (config.contains("family")) {
            model_from_config(config);
        }
        if (kind == "rosenthal-check" && model && !model->centered && std::abs(model->mean) > 1e-12)
            throw ConfigError("/center", "the Rosenthal check needs a centered observable");
    } catch (const SpecError& e) {
        out.exit_code = kExitValidation;
        out.error = e.what();
        const auto* ce = dynamic_cast<const ConfigError*>(&e);
        out.summary = {{"status", "validation-error"},
                       {"where", ce ? ce->where() : std::string("")},
                       {"message", e.what()}};
        return out;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (kind == "coeffs") run_coeffs(c, *model);
        else if (kind == "rosenthal-check") run_rosenthal(c, *model);
        else if (kind == "kmt-pipeline") run_kmt(c, *model);
        else if (kind == "rates") run_rates(c);
        else if (kind == "sigma2") run_sigma2(c, *model);
        else run_bounds(c, *model);
    } catch (const SpecError& e) {
        out.exit_code = kExitValidation;
        out.error = e.what();
        out.summary = {{"status", "validation-error"}, {"where", "/params"}, {"message", e.what()}};
        return out;
    } catch (const std::exception& e) {
        out.exit_code = kExitVerdict;
        out.error = e.what();
        out.summary = {{"status", "runtime-error"}, {"message", e.what()}};
        return out;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool all = true;
    for (const auto& v : c.verdicts) {
        if (!v.holds && all) out.failing_record = v.record;
        all = all && v.holds;
    }
    Json s;
    s["tool"] = "sipkit";
    s["version"] = kToolVersion;
    s["generator"] = std::string(kGeneratorName);
    s["kind"] = kind;
    s["config_hash"] = config_hash(config);
    s["seed"] = c.seed;
    if (model) {
        s["model"] = {{"family", family_name(model->family)},
                      {"centered", model->centered},
                      {"mean", model->mean}};
    }
    s["results"] = c.results;
    s["verdicts"] = verdicts_json(c.verdicts);
    s["all_hold"] = all;
    s["status"] = all ? "ok" : "verdict-failed";
    if (!all) s["failing_record"] = out.failing_record;
    Json files = Json::array();
    for (const auto& [name, _] : c.files) files.push_back(name);
    s["artifacts"] = files;
    out.summary = s;
    out.exit_code = all ? kExitOk : kExitVerdict;
    c.files["summary.json"] = s.dump(2) + "\n";
    out.artifacts = c.files;

    if (options.write) {
        std::filesystem::create_directories(options.out);
        for (const auto& [name, content] : out.artifacts) {
            std::ofstream f(options.out / name, std::ios::binary);
            f << content;
            if (!f) throw std::runtime_error("cannot write " + (options.out / name).string());
        }
        // Kept out of summary.json so that the summary stays byte-identical across runs.
        const Json timing = {{"wall_seconds", wall}, {"workers", c.workers}, {"config_hash", config_hash(config)}};
        std::ofstream(options.out / "timing.json") << timing.dump(2) << "\n";
    }
    return out;
}

RunResult report_directory(const std::filesystem::path& dir, std::string& text) {
    RunResult out;
    std::ifstream f(dir / "summary.json");
    if (!f) {
        out.exit_code = kExitValidation;
        out.error = "no summary.json in " + dir.string();
        return out;
    }
    try {
        out.summary = Json::parse(f);
    } catch (const Json::parse_error& e) {
        out.exit_code = kExitValidation;
        out.error = std::string("summary.json: ") + e.what();
        return out;
    }
    std::ostringstream os;
    os << "kind: " << out.summary.value("kind", "?") << "\n";
    os << "config hash: " << out.summary.value("config_hash", "?") << "\n";
    os << "generator: " << out.summary.value("generator", "?") << "\n";
    std::size_t pass = 0, total = 0;
    for (const auto& v : out.summary.value("verdicts", Json::array())) {
        ++total;
        const bool ok = v.value("holds", false);
        pass += ok;
        os << (ok ? "PASS " : "FAIL ") << v.value("name", "") << "  [" << v.value("record", "") << "]\n";
        if (!ok && out.failing_record.empty()) out.failing_record = v.value("record", "");
    }
    os << pass << "/" << total << " verdicts hold\n";
    text = os.str();
    out.exit_code = pass == total ? kExitOk : kExitVerdict;
    return out;
}

}  // namespace sipkit
