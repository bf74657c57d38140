#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <ctlasso/ctlasso.hpp>

namespace ctlasso::cli {
namespace {

using nlohmann::json;
using io::format_double;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string input;
    std::string response;
    std::string method = "lasso";
    std::optional<double> nu;
    std::optional<double> gamma;
    std::optional<double> lambda2;
    std::optional<double> lambda;
    std::string nu_grid, gamma_grid, lambda2_grid;
    int cv_folds = 5;
    std::string cv_variant = "auto";
    std::uint64_t seed = 0;
    int max_steps = 0;
    std::string out;
    std::string format = "csv";

    // simulate
    std::string preset;
    std::string config;
    std::string n_list;
    std::optional<int> reps;
    std::string methods;
    std::string tuning;
    std::string detail_json;
    std::string plot_csv;
    bool latent_grouped = false;
    std::optional<int> bootstrap;

    // diagnose
    std::string sigma;
    std::optional<int> p;
    std::optional<int> n;
    std::string support;
    std::string signs;
    std::string beta;
};

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) {
        cur = io::detail::trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& s, const std::string& what)
{
    double v = 0.0;
    if (!io::detail::parse_number(s, v)) throw UsageError("bad number '" + s + "' for " + what);
    return v;
}

int to_int(const std::string& s, const std::string& what)
{
    const double v = to_double(s, what);
    if (v != std::floor(v)) throw UsageError("expected an integer for " + what + ", got '" + s + "'");
    return static_cast<int>(v);
}

std::vector<double> parse_list(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    for (const auto& t : split(s, ',')) out.push_back(to_double(t, what));
    if (out.empty()) throw UsageError("empty list for " + what);
    return out;
}

/// "1-10,15" (1-based) to zero-based indices, order preserved.
IndexSet parse_support(const std::string& s, Index p)
{
    IndexSet out;
    for (const auto& tok : split(s, ',')) {
        const auto dash = tok.find('-', 1);
        int lo = 0, hi = 0;
        if (dash == std::string::npos) {
            lo = hi = to_int(tok, "--support");
        } else {
            lo = to_int(tok.substr(0, dash), "--support");
            hi = to_int(tok.substr(dash + 1), "--support");
        }
        if (lo < 1 || hi < lo || hi > p)
            throw UsageError("support entry '" + tok + "' outside 1.." + std::to_string(p));
        for (int j = lo; j <= hi; ++j) out.push_back(j - 1);
    }
    IndexSet sorted = out;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw UsageError("support lists a variable twice");
    if (out.empty()) throw UsageError("support is empty");
    if (static_cast<Index>(out.size()) >= p) throw UsageError("support must leave at least one irrelevant variable");
    return sorted;
}

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : fallback_(fallback)
    {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw UsageError("cannot write '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : fallback_; }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

void write_text(const std::string& path, std::ostream& fallback, const std::string& text)
{
    Output o(path, fallback);
    o.stream() << text;
}

struct LoadedData {
    StandardizedDesign design;
    std::vector<std::string> predictors;
};

LoadedData load_data(const Options& o)
{
    if (o.input.empty()) throw UsageError("--input is required");
    if (o.response.empty()) throw UsageError("--response is required");
    const io::NumericTable t = io::read_csv(o.input);
    const Index yi = t.column_index(o.response);
    LoadedData d;
    IndexSet xcols;
    for (Index j = 0; j < static_cast<Index>(t.columns.size()); ++j) {
        if (j == yi) continue;
        xcols.push_back(j);
        d.predictors.push_back(t.columns[static_cast<std::size_t>(j)]);
    }
    if (xcols.empty()) throw UsageError("no predictor columns besides the response");
    if (t.values.rows() < 2) throw UsageError("need at least 2 data rows");
    try {
        d.design = standardize(t.values(Eigen::all, xcols), t.values.col(yi));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::constant_column) {
            // name the column rather than its predictor index
            const std::string msg = e.what();
            const auto pos = msg.find("column ");
            if (pos != std::string::npos) {
                const std::size_t j = std::stoul(msg.substr(pos + 7));
                throw Error(ErrorKind::constant_column, "column '" + d.predictors[j] + "' is constant");
            }
        }
        throw;
    }
    return d;
}

EstimatorSpec spec_from_options(const Options& o)
{
    const std::string& m = o.method;
    if (m == "lasso") return EstimatorSpec::lasso();
    if (m == "ust") return EstimatorSpec::ust();
    if (m == "ct-hard") return EstimatorSpec::ct_lasso(ThresholdRule::hard(o.nu.value_or(0.0)));
    if (m == "ct-soft") return EstimatorSpec::ct_lasso(ThresholdRule::soft(o.nu.value_or(0.0)));
    if (m == "ct-adapt") return EstimatorSpec::ct_lasso(ThresholdRule::adaptive(o.nu.value_or(0.0), o.gamma.value_or(0.0)));
    if (m == "adaptive-lasso") return EstimatorSpec::adaptive_lasso(o.gamma.value_or(0.0));
    if (m == "elastic-net") return EstimatorSpec::elastic_net(o.lambda2.value_or(0.0));
    throw UsageError("unknown method '" + m + "'");
}

TuningGrids grids_from_options(const Options& o)
{
    TuningGrids g;
    if (!o.nu_grid.empty()) g.nu = parse_list(o.nu_grid, "--nu-grid");
    else if (o.nu) g.nu = {*o.nu};
    if (!o.gamma_grid.empty()) g.gamma = parse_list(o.gamma_grid, "--gamma-grid");
    else if (o.gamma) g.gamma = {*o.gamma};
    if (!o.lambda2_grid.empty()) g.lambda2 = parse_list(o.lambda2_grid, "--lambda2-grid");
    else if (o.lambda2) g.lambda2 = {*o.lambda2};
    return g;
}

LarsOptions lars_options(const Options& o)
{
    LarsOptions l;
    l.max_steps = o.max_steps;
    return l;
}

json spec_json(const EstimatorSpec& s, const std::string& family)
{
    return {{"method", family}, {"rule", io::to_json(s.effective_rule())}, {"gamma_weights", s.gamma_weights}};
}

json curve_json(const CvCurve& c)
{
    auto arr = [](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) std::isfinite(x) ? a.push_back(x) : a.push_back(nullptr);
        return a;
    };
    return {{"lambdas", arr(c.lambdas)}, {"mean_error", arr(c.mean_error)}, {"sd_error", arr(c.sd_error)},
            {"folds", c.folds}};
}

json selection_json(const CvSelection& s, int folds)
{
    return {{"variant_used", to_string(s.variant_used)}, {"lambda", s.lambda_hat},
            {"min_error", s.min_error},                  {"min_index", s.min_index},
            {"threshold_used", s.threshold_used},        {"selected_error", s.selected_error},
            {"folds", folds}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- fit / path / cv

struct Fitted {
    EstimatorSpec spec;
    double lambda = 0.0;
    std::optional<GridSearchResult> cv;
};

Fitted choose_fit(const Options& o, const StandardizedDesign& d)
{
    Fitted f;
    if (o.lambda) {
        if (*o.lambda < 0.0) throw UsageError("--lambda must be >= 0");
        f.spec = spec_from_options(o);
        f.lambda = *o.lambda;
        return f;
    }
    const MethodFamily fam = make_family(o.method, grids_from_options(o));
    f.cv = grid_search_cv(d, fam.grid, o.cv_folds, cv_variant_from_string(o.cv_variant), o.seed, 100, 1e-3,
                          lars_options(o));
    f.spec = f.cv->selection.spec;
    f.lambda = f.cv->selection.lambda_hat;
    return f;
}

int cmd_fit(const Options& o, std::ostream& out)
{
    const LoadedData data = load_data(o);
    const StandardizedDesign& d = data.design;
    const Fitted f = choose_fit(o, d);
    const SolutionPath path = fit_path(f.spec, d, lars_options(o));
    // a cross-validated lambda may sit below where the full-data path stopped;
    // a path that only ran into the numerical floor is also safe to extend
    const bool clamp = f.cv.has_value() || path.termination == Termination::lambda_floor ||
                       path.termination == Termination::correlation_exhausted;
    const VectorXd beta = coefficients_at(path, f.lambda, clamp);
    const VectorXd raw = d.raw_coefficients(beta);
    const double intercept = d.raw_intercept(beta);

    if (o.format == "json") {
        json coef = json::object(), stdz = json::object();
        for (std::size_t j = 0; j < data.predictors.size(); ++j) {
            coef[data.predictors[j]] = raw(static_cast<Index>(j));
            stdz[data.predictors[j]] = beta(static_cast<Index>(j));
        }
        json tuning = {{"rule", f.cv ? "cross-validation" : "fixed"}, {"lambda", f.lambda}};
        if (f.cv) tuning["cv"] = selection_json(f.cv->selection, o.cv_folds);
        json j = {{"schema_version", io::kSchemaVersion},
                  {"command", "fit"},
                  {"response", o.response},
                  {"estimator", spec_json(f.spec, o.method)},
                  {"tuning", tuning},
                  {"termination", to_string(path.termination)},
                  {"intercept", intercept},
                  {"coefficients", coef},
                  {"standardized", stdz}};
        write_text(o.out, out, dump(j));
    } else {
        std::ostringstream s;
        s << "term,coefficient,standardized\n";
        s << "(intercept)," << format_double(intercept) << ",0\n";
        for (std::size_t j = 0; j < data.predictors.size(); ++j)
            s << data.predictors[j] << "," << format_double(raw(static_cast<Index>(j))) << ","
              << format_double(beta(static_cast<Index>(j))) << "\n";
        write_text(o.out, out, s.str());
    }
    return kExitOk;
}

int cmd_path(const Options& o, std::ostream& out)
{
    const LoadedData data = load_data(o);
    const SolutionPath path = fit_path(spec_from_options(o), data.design, lars_options(o));
    if (o.format == "json") {
        json j = io::to_json(path);
        j["command"] = "path";
        j["method"] = o.method;
        j["columns"] = data.predictors;
        write_text(o.out, out, dump(j));
    } else {
        std::ostringstream s;
        s << "lambda";
        for (const auto& name : data.predictors) s << "," << name;
        s << "\n";
        for (const auto& bp : path.breakpoints) {
            s << format_double(bp.lambda);
            for (Index j = 0; j < bp.beta.size(); ++j) s << "," << format_double(bp.beta(j));
            s << "\n";
        }
        write_text(o.out, out, s.str());
    }
    return kExitOk;
}

int cmd_cv(const Options& o, std::ostream& out)
{
    const LoadedData data = load_data(o);
    const MethodFamily fam = make_family(o.method, grids_from_options(o));
    const GridSearchResult gs = grid_search_cv(data.design, fam.grid, o.cv_folds, cv_variant_from_string(o.cv_variant),
                                               o.seed, 100, 1e-3, lars_options(o));
    const auto chosen = static_cast<std::size_t>(
        std::find(fam.grid.begin(), fam.grid.end(), gs.selection.spec) - fam.grid.begin());
    const CvCurve& curve = gs.curves[chosen];
    if (o.format == "json") {
        json grid = json::array();
        for (std::size_t m = 0; m < fam.grid.size(); ++m)
            grid.push_back({{"estimator", spec_json(fam.grid[m], o.method)}, {"curve", curve_json(gs.curves[m])}});
        json j = {{"schema_version", io::kSchemaVersion},
                  {"command", "cv"},
                  {"estimator", spec_json(gs.selection.spec, o.method)},
                  {"selection", selection_json(gs.selection, o.cv_folds)},
                  {"grid", grid}};
        write_text(o.out, out, dump(j));
    } else {
        std::ostringstream s;
        s << "lambda,mean_error,sd_error,selected\n";
        for (std::size_t i = 0; i < curve.lambdas.size(); ++i)
            s << format_double(curve.lambdas[i]) << "," << format_double(curve.mean_error[i]) << ","
              << format_double(curve.sd_error[i]) << "," << (i == gs.selection.lambda_index ? 1 : 0) << "\n";
        write_text(o.out, out, s.str());
    }
    return kExitOk;
}

// ---------------------------------------------------------------- simulate

std::map<std::string, std::string> read_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (io::detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + " is not key = value");
        kv[io::detail::trim(line.substr(0, eq))] = io::detail::trim(line.substr(eq + 1));
    }
    return kv;
}

/// Config values fill in options the command line left unset.
void merge_config(Options& o, const std::map<std::string, std::string>& kv, SimulationDesign& custom, bool& has_custom)
{
    static const std::vector<std::string> known{"preset",      "n",           "reps",        "methods",
                                                "tuning",      "cv_folds",    "cv_variant",  "seed",
                                                "nu_grid",     "gamma_grid",  "lambda2_grid", "latent_grouped",
                                                "bootstrap",   "p",           "sigma",       "sigma_noise",
                                                "beta"};
    for (const auto& [k, v] : kv)
        if (std::find(known.begin(), known.end(), k) == known.end()) throw UsageError("unknown config key '" + k + "'");
    auto get = [&](const std::string& k) -> std::optional<std::string> {
        auto it = kv.find(k);
        return it == kv.end() ? std::nullopt : std::optional(it->second);
    };
    if (o.preset.empty() && get("preset")) o.preset = *get("preset");
    if (o.n_list.empty() && get("n")) o.n_list = *get("n");
    if (!o.reps && get("reps")) o.reps = to_int(*get("reps"), "reps");
    if (o.methods.empty() && get("methods")) o.methods = *get("methods");
    if (o.tuning.empty() && get("tuning")) o.tuning = *get("tuning");
    if (get("cv_folds")) o.cv_folds = to_int(*get("cv_folds"), "cv_folds");
    if (get("cv_variant")) o.cv_variant = *get("cv_variant");
    if (get("seed")) o.seed = static_cast<std::uint64_t>(to_int(*get("seed"), "seed"));
    if (o.nu_grid.empty() && get("nu_grid")) o.nu_grid = *get("nu_grid");
    if (o.gamma_grid.empty() && get("gamma_grid")) o.gamma_grid = *get("gamma_grid");
    if (o.lambda2_grid.empty() && get("lambda2_grid")) o.lambda2_grid = *get("lambda2_grid");
    if (get("latent_grouped")) o.latent_grouped = o.latent_grouped || *get("latent_grouped") == "true";
    if (!o.bootstrap && get("bootstrap")) o.bootstrap = to_int(*get("bootstrap"), "bootstrap");

    if (get("p") || get("sigma") || get("beta") || get("sigma_noise")) {
        if (!(get("p") && get("sigma") && get("beta") && get("sigma_noise")))
            throw UsageError("custom designs need p, sigma, sigma_noise and beta");
        has_custom = true;
        custom.name = "custom";
        custom.p = to_int(*get("p"), "p");
        custom.sigma_spec = sigma_spec_from_string(*get("sigma"));
        custom.sigma_noise = to_double(*get("sigma_noise"), "sigma_noise");
        const auto b = parse_list(*get("beta"), "beta");
        if (static_cast<Index>(b.size()) != custom.p) throw UsageError("beta must list p values");
        custom.beta_star = Eigen::Map<const VectorXd>(b.data(), static_cast<Index>(b.size()));
    }
}

json rep_json(const ReplicationResult& r)
{
    return {{"replication", r.replication},
            {"g", r.metrics.g},
            {"tp", r.metrics.tp},
            {"fp", r.metrics.fp},
            {"sensitivity", r.metrics.sensitivity},
            {"specificity", r.metrics.specificity},
            {"rpe", r.rpe},
            {"selected_count", r.selected_count},
            {"tuning", {{"estimator", spec_json(r.spec, r.method)}, {"lambda", r.lambda}, {"failed", r.failed}}}};
}

int cmd_simulate(Options o, std::ostream& out)
{
    SimulationDesign custom;
    bool has_custom = false;
    if (!o.config.empty()) merge_config(o, read_config(o.config), custom, has_custom);
    if (o.preset.empty() && !has_custom) throw UsageError("--preset or a config with a custom design is required");
    if (!o.preset.empty() && has_custom) throw UsageError("a config may define a preset or a custom design, not both");
    if (o.n_list.empty()) throw UsageError("--n is required (comma list allowed)");
    const auto ns = parse_list(o.n_list, "--n");
    std::vector<std::string> methods = split(o.methods.empty() ? "lasso,ct-soft" : o.methods, ',');
    for (const auto& m : methods)
        if (std::find(method_family_names().begin(), method_family_names().end(), m) == method_family_names().end())
            throw UsageError("unknown method '" + m + "'");
    const std::string tuning_name = o.tuning.empty() ? "best" : o.tuning;
    ExperimentOptions eo;
    if (tuning_name == "best") eo.tuning = Tuning::best_possible;
    else if (tuning_name == "cv") eo.tuning = Tuning::cross_validation;
    else throw UsageError("--tuning must be best or cv");
    eo.cv.folds = o.cv_folds;
    eo.cv.variant = cv_variant_from_string(o.cv_variant);
    eo.grids = grids_from_options(o);
    eo.bootstrap_b = o.bootstrap.value_or(500);
    eo.lars = lars_options(o);

    std::vector<ExperimentResult> results;
    for (double nv : ns) {
        if (nv < 2 || nv != std::floor(nv)) throw UsageError("sample sizes must be integers >= 2");
        const auto n = static_cast<Index>(nv);
        SimulationDesign d;
        if (has_custom) {
            d = custom;
            d.n = n;
        } else {
            try {
                d = presets::by_name(o.preset, n);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
        }
        d.replications = o.reps.value_or(200);
        d.seed = o.seed;
        d.latent_grouped = o.latent_grouped;
        results.push_back(run_experiment(d, methods, eo));
    }

    if (o.format == "json") {
        json rows = json::array();
        for (const auto& r : results)
            for (const auto& a : r.aggregates)
                rows.push_back({{"preset", r.design.name}, {"n", r.design.n}, {"method", a.method},
                                {"tuning", to_string(r.tuning)}, {"replications", a.replications},
                                {"median_g", a.median_g}, {"se_median_g", a.se_median_g},
                                {"median_rpe", a.median_rpe}, {"se_median_rpe", a.se_median_rpe},
                                {"median_tp", a.median_tp}, {"median_fp", a.median_fp},
                                {"median_sensitivity", a.median_sensitivity},
                                {"median_specificity", a.median_specificity}});
        write_text(o.out, out, dump({{"schema_version", io::kSchemaVersion}, {"command", "simulate"},
                                     {"seed", o.seed}, {"aggregates", rows}}));
    } else {
        std::ostringstream s;
        s << "preset,n,method,tuning,replications,median_g,se_median_g,median_rpe,se_median_rpe,median_tp,"
             "median_fp,median_sensitivity,median_specificity\n";
        for (const auto& r : results)
            for (const auto& a : r.aggregates)
                s << r.design.name << "," << r.design.n << "," << a.method << "," << to_string(r.tuning) << ","
                  << a.replications << "," << format_double(a.median_g) << "," << format_double(a.se_median_g) << ","
                  << format_double(a.median_rpe) << "," << format_double(a.se_median_rpe) << ","
                  << format_double(a.median_tp) << "," << format_double(a.median_fp) << ","
                  << format_double(a.median_sensitivity) << "," << format_double(a.median_specificity) << "\n";
        write_text(o.out, out, s.str());
    }

    if (!o.plot_csv.empty()) {
        std::ostringstream s;
        s << "n,method,median_g\n";
        for (const auto& r : results)
            for (const auto& a : r.aggregates) s << r.design.n << "," << a.method << "," << format_double(a.median_g) << "\n";
        write_text(o.plot_csv, out, s.str());
    }
    if (!o.detail_json.empty()) {
        json all = json::array();
        for (const auto& r : results) {
            json methods_json = json::array();
            for (std::size_t m = 0; m < r.reps.size(); ++m) {
                json reps = json::array();
                for (const auto& rr : r.reps[m]) reps.push_back(rep_json(rr));
                methods_json.push_back({{"method", r.aggregates[m].method}, {"replications", reps}});
            }
            all.push_back({{"preset", r.design.name}, {"n", r.design.n}, {"methods", methods_json}});
        }
        write_text(o.detail_json, out,
                   dump({{"schema_version", io::kSchemaVersion}, {"command", "simulate"}, {"runs", all}}));
    }
    return kExitOk;
}

// ---------------------------------------------------------------- diagnose

int cmd_diagnose(const Options& o, std::ostream& out)
{
    const bool from_sigma = !o.sigma.empty();
    if (from_sigma == !o.input.empty()) throw UsageError("diagnose needs exactly one of --sigma or --input");
    if (o.support.empty() && o.beta.empty()) throw UsageError("--support (or --beta) is required");

    CovMatrix cov;
    Index p = 0;
    std::optional<Index> n = o.n ? std::optional<Index>(*o.n) : std::nullopt;
    std::optional<LoadedData> data;
    json source;
    if (from_sigma) {
        if (!o.p) throw UsageError("--p is required with --sigma");
        p = *o.p;
        try {
            cov = make_sigma(sigma_spec_from_string(o.sigma), p);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        source = {{"sigma", o.sigma}};
    } else {
        data = load_data(o);
        p = data->design.p();
        if (!n) n = data->design.n();
        cov = apply_threshold(sample_covariance(data->design), spec_from_options(o).effective_rule());
        source = {{"input", o.input}, {"method", o.method}, {"rule", io::to_json(spec_from_options(o).effective_rule())}};
    }

    std::optional<VectorXd> beta_raw;
    if (!o.beta.empty()) {
        const auto b = parse_list(o.beta, "--beta");
        if (static_cast<Index>(b.size()) != p) throw UsageError("--beta must list p values");
        beta_raw = Eigen::Map<const VectorXd>(b.data(), p);
    }

    IndexSet s_set;
    if (!o.support.empty()) {
        s_set = parse_support(o.support, p);
        if (beta_raw) {
            IndexSet from_beta;
            for (Index j = 0; j < p; ++j)
                if ((*beta_raw)(j) != 0.0) from_beta.push_back(j);
            if (from_beta != s_set) throw UsageError("--support disagrees with the nonzeros of --beta");
        }
    } else {
        for (Index j = 0; j < p; ++j)
            if ((*beta_raw)(j) != 0.0) s_set.push_back(j);
        if (s_set.empty() || static_cast<Index>(s_set.size()) >= p)
            throw UsageError("--beta must have a non-empty proper support");
    }

    VectorXd signs = VectorXd::Ones(static_cast<Index>(s_set.size()));
    if (!o.signs.empty()) {
        const auto tokens = split(o.signs, ',');
        if (tokens.size() != s_set.size()) throw UsageError("--signs must list one sign per support variable");
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] == "+" || tokens[i] == "1" || tokens[i] == "+1") signs(static_cast<Index>(i)) = 1.0;
            else if (tokens[i] == "-" || tokens[i] == "-1") signs(static_cast<Index>(i)) = -1.0;
            else throw UsageError("bad sign '" + tokens[i] + "'");
        }
    } else if (beta_raw) {
        for (std::size_t i = 0; i < s_set.size(); ++i) signs(static_cast<Index>(i)) = (*beta_raw)(s_set[i]) > 0 ? 1.0 : -1.0;
    }

    DiagnosticsReport rep = diagnose(cov, s_set, signs, n);
    if (beta_raw) {
        VectorXd abs_s(static_cast<Index>(s_set.size()));
        for (std::size_t i = 0; i < s_set.size(); ++i) abs_s(static_cast<Index>(i)) = std::abs((*beta_raw)(s_set[i]));
        rep.max_abs_beta = abs_s.maxCoeff();
        rep.min_abs_beta = abs_s.minCoeff();
    }
    if (data && beta_raw && o.lambda) {
        const StandardizedDesign& d = data->design;
        const VectorXd beta_std = beta_raw->cwiseProduct(d.column_scales);
        const VectorXd eps = d.y - d.x * beta_std;
        rep.lemma1 = lemma1_certificate(d, eps, beta_std, spec_from_options(o).effective_rule(), *o.lambda);
    }

    IndexSet support_1 = s_set, irrelevant_1 = rep.irrep.irrelevant;
    for (auto& j : support_1) ++j;
    for (auto& j : irrelevant_1) ++j;
    json j = {{"schema_version", io::kSchemaVersion},
              {"command", "diagnose"},
              {"source", source},
              {"p", p},
              {"support", support_1},
              {"irrelevant", irrelevant_1},
              {"irrep_index", io::to_json(rep.irrep.entries)},
              {"irrep_max", rep.irrep.max_entry},
              {"irrep_inf_norm", rep.irrep.inf_norm},
              {"d_ss", rep.d_ss},
              {"d_cs", rep.d_cs},
              {"lambda_min_ss", rep.lambda_min_ss},
              {"d_bar", rep.d_bar},
              {"nu_recommended", rep.nu_recommended ? json(*rep.nu_recommended) : json(nullptr)},
              {"max_abs_beta", rep.max_abs_beta ? json(*rep.max_abs_beta) : json(nullptr)},
              {"min_abs_beta", rep.min_abs_beta ? json(*rep.min_abs_beta) : json(nullptr)}};
    if (rep.lemma1) {
        j["lemma1"] = {{"holds", rep.lemma1->holds},
                       {"which_failed", rep.lemma1->which_failed()},
                       {"irrep_lhs", rep.lemma1->irrep_lhs},
                       {"beta_min_lhs", rep.lemma1->beta_min_lhs},
                       {"lambda", *o.lambda}};
    } else {
        j["lemma1"] = nullptr;
    }
    write_text(o.out, out, dump(j));
    return kExitOk;
}

bool is_usage_kind(ErrorKind k)
{
    switch (k) {
        case ErrorKind::parse_error:
        case ErrorKind::invalid_argument:
        case ErrorKind::dimension_mismatch:
        case ErrorKind::constant_column:
        case ErrorKind::too_few_samples:
        case ErrorKind::degenerate_truth:
        case ErrorKind::invalid_rho:
        case ErrorKind::not_psd:
        case ErrorKind::empty_subset: return true;
        default: return false;
    }
}

void add_data_options(CLI::App* c, Options& o)
{
    c->add_option("--input", o.input, "CSV file with a header row");
    c->add_option("--response", o.response, "response column name");
    c->add_option("--method", o.method, "lasso|ct-hard|ct-soft|ct-adapt|ust|adaptive-lasso|elastic-net");
    c->add_option("--nu", o.nu, "covariance threshold level");
    c->add_option("--gamma", o.gamma, "adaptive exponent");
    c->add_option("--lambda2", o.lambda2, "elastic-net ridge level");
    c->add_option("--max-steps", o.max_steps, "path step budget (0 = default)");
}

void add_cv_options(CLI::App* c, Options& o)
{
    c->add_option("--nu-grid", o.nu_grid, "comma list of nu values");
    c->add_option("--gamma-grid", o.gamma_grid, "comma list of gamma values");
    c->add_option("--lambda2-grid", o.lambda2_grid, "comma list of lambda2 values");
    c->add_option("--cv-folds", o.cv_folds, "number of folds");
    c->add_option("--cv-variant", o.cv_variant, "minus|zero|plus|auto");
}

void add_output_options(CLI::App* c, Options& o)
{
    c->add_option("--seed", o.seed, "random seed");
    c->add_option("--out", o.out, "output file (default stdout)");
    c->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Covariance-thresholded lasso toolkit"};
    app.require_subcommand(1, 1);

    auto* fit = app.add_subcommand("fit", "fit coefficients at a lambda or by cross-validation");
    add_data_options(fit, o);
    add_cv_options(fit, o);
    add_output_options(fit, o);
    fit->add_option("--lambda", o.lambda, "penalty level on the standardized scale");

    auto* path = app.add_subcommand("path", "export the piecewise-linear solution path");
    add_data_options(path, o);
    add_output_options(path, o);

    auto* cv = app.add_subcommand("cv", "cross-validated tuning over the method's grid");
    add_data_options(cv, o);
    add_cv_options(cv, o);
    add_output_options(cv, o);

    auto* sim = app.add_subcommand("simulate", "replicated simulation experiments");
    sim->add_option("--preset", o.preset, "intro|ex1|ex2|ex3");
    sim->add_option("--config", o.config, "key = value experiment config");
    sim->add_option("--n", o.n_list, "sample size(s), comma separated");
    sim->add_option("--reps", o.reps, "replications");
    sim->add_option("--methods", o.methods, "comma list of methods");
    sim->add_option("--tuning", o.tuning, "best|cv");
    sim->add_option("--detail-json", o.detail_json, "per-replication JSON output");
    sim->add_option("--plot-csv", o.plot_csv, "median G versus n CSV output");
    sim->add_option("--bootstrap", o.bootstrap, "bootstrap resamples for standard errors");
    sim->add_flag("--latent-grouped", o.latent_grouped, "draw the grouped design from latent factors");
    sim->add_option("--max-steps", o.max_steps, "path step budget (0 = default)");
    add_cv_options(sim, o);
    add_output_options(sim, o);

    auto* diag = app.add_subcommand("diagnose", "irrepresentable and sparsity diagnostics");
    add_data_options(diag, o);
    add_output_options(diag, o);
    diag->add_option("--sigma", o.sigma, "identity|ar:<rho>|constant:<rho>|grouped");
    diag->add_option("--p", o.p, "dimension for --sigma");
    diag->add_option("--n", o.n, "sample size for the recommended threshold");
    diag->add_option("--support", o.support, "true support, 1-based, e.g. 1-10,15");
    diag->add_option("--signs", o.signs, "comma list of +/- per support variable");
    diag->add_option("--beta", o.beta, "true coefficients (p values, raw units)");
    diag->add_option("--lambda", o.lambda, "lambda for the sign-recovery certificate");

    std::vector<const char*> argv{"ctlasso"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: Usage: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*fit) return cmd_fit(o, out);
        if (*path) return cmd_path(o, out);
        if (*cv) return cmd_cv(o, out);
        if (*sim) return cmd_simulate(o, out);
        if (*diag) return cmd_diagnose(o, out);
    } catch (const UsageError& e) {
        err << "error: Usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_usage_kind(e.kind()) ? kExitUsage : kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: Internal: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}

} // namespace ctlasso::cli
