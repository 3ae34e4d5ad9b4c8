#include "commands.hpp"

#include <geetgdr/geetgdr.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace geetgdr::cli {

using nlohmann::ordered_json;

namespace {

std::string sha256_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io::input_error(path, 0, 0, "cannot open file");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return hex.str();
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

ordered_json config_json(const FitConfig& c)
{
    return {
        {"structure", to_string(c.structure)},
        {"tau", c.tau},
        {"dv", c.dv},
        {"k_max", c.k_max},
        {"standardize", c.standardize},
        {"alpha_floor_epsilon", c.alpha_floor_epsilon},
        {"selection_tolerance", c.selection_tolerance},
        {"seed", c.rng_seed},
        {"estimate_variances", c.estimate_variances},
    };
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

void add_manifest(OutputSet& out, const std::string& subcommand, ordered_json config,
                  const std::vector<std::string>& inputs, std::uint64_t seed)
{
    ordered_json files = ordered_json::array();
    for (const auto& path : inputs) files.push_back({{"path", path}, {"sha256", sha256_file(path)}});
    ordered_json outputs = ordered_json::array();
    for (const auto& [name, _] : out) outputs.push_back(name);
    outputs.push_back("manifest.json");
    ordered_json m = {
        {"tool", "geetgdr"},
        {"version", version},
        {"subcommand", subcommand},
        {"config", std::move(config)},
        {"inputs", std::move(files)},
        {"outputs", std::move(outputs)},
        {"seed", seed},
        {"timestamp_utc", utc_timestamp()},
    };
    out["manifest.json"] = dump(m);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        while (!cur.empty() && cur.front() == ' ') cur.erase(cur.begin());
        while (!cur.empty() && cur.back() == ' ') cur.pop_back();
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

int parse_int(const std::string& s, const char* what)
{
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw validation_error({std::string("invalid ") + what + ": '" + s + "'"});
    }
    return v;
}

struct LoadedData
{
    LongitudinalDataset raw;
    LongitudinalDataset used; // standardized when configured
    std::optional<Standardization> transform;
};

LoadedData load(const FitOptions& opts)
{
    auto ds = io::load_dataset(opts.expression, opts.outcomes);
    if (!opts.config.standardize) return {ds, ds, std::nullopt};
    auto z = standardize_covariates(ds);
    return {ds, z.data, z.transform};
}

ordered_json correlation_json(const WorkingCorrelation& wc)
{
    ordered_json j = {{"kind", to_string(wc.kind)}};
    switch (wc.kind) {
        case CorrelationKind::independent: j["alpha"] = nullptr; break;
        case CorrelationKind::exchangeable:
        case CorrelationKind::ar1: j["alpha"] = wc.alpha; break;
        case CorrelationKind::unstructured: {
            ordered_json rows = ordered_json::array();
            for (Index r = 0; r < wc.alpha_matrix.rows(); ++r) {
                ordered_json row = ordered_json::array();
                for (Index c = 0; c < wc.alpha_matrix.cols(); ++c) row.push_back(wc.alpha_matrix(r, c));
                rows.push_back(std::move(row));
            }
            j["alpha"] = std::move(rows);
            break;
        }
    }
    return j;
}

void emit_fit(OutputSet& out, const LoadedData& data, const FitOptions& opts, const FitResult& fit)
{
    const auto& ds = data.raw;
    const Matrix beta = (opts.raw_scale && data.transform) ? data.transform->to_raw_scale(fit.beta)
                                                          : fit.beta;
    std::ostringstream coef;
    coef << "time_label,feature,beta\n";
    for (Index j = 0; j < beta.rows(); ++j) {
        const auto& label = io::csv_field(ds.time_labels()[static_cast<std::size_t>(j)]);
        coef << label << ",(intercept)," << io::format_double(beta(j, 0)) << '\n';
        for (Index p = 0; p < ds.n_features(); ++p) {
            coef << label << ',' << io::csv_field(ds.feature_names()[static_cast<std::size_t>(p)])
                 << ',' << io::format_double(beta(j, p + 1)) << '\n';
        }
    }
    out["coefficients.csv"] = coef.str();

    std::ostringstream sel;
    sel << "feature";
    for (const auto& l : ds.time_labels()) sel << ',' << io::csv_field(l);
    sel << ",union\n";
    for (Index p = 0; p < ds.n_features(); ++p) {
        sel << io::csv_field(ds.feature_names()[static_cast<std::size_t>(p)]);
        bool any = false;
        for (Index j = 0; j < beta.rows(); ++j) {
            const auto& set = fit.selection.per_time[static_cast<std::size_t>(j)];
            const bool in = std::find(set.begin(), set.end(), p) != set.end();
            any = any || in;
            sel << ',' << (in ? 1 : 0);
        }
        sel << ',' << (any ? 1 : 0) << '\n';
    }
    out["selection.csv"] = sel.str();

    ordered_json report = {
        {"structure", to_string(opts.config.structure)},
        {"k_used", fit.k_used},
        {"ql_trace", fit.ql_trace},
        {"correlation", correlation_json(fit.correlation)},
        {"sigma_sq", std::vector<double>(fit.variances.sigma_sq.data(),
                                         fit.variances.sigma_sq.data() + fit.variances.sigma_sq.size())},
        {"mse", mse(data.used, fit.beta)},
        {"mse_convention", "sum of squared residuals / (n * t)"},
        {"positive_definite_repairs", fit.repairs},
        {"coefficient_scale", (opts.raw_scale && data.transform) ? "raw" : (data.transform ? "standardized" : "raw")},
        {"selected_union", [&] {
             std::vector<std::string> names;
             for (auto p : fit.selection.union_set) names.push_back(ds.feature_names()[static_cast<std::size_t>(p)]);
             return names;
         }()},
    };
    out["fit_report.json"] = dump(report);
}

ordered_json fit_manifest_config(const FitOptions& opts)
{
    auto c = config_json(opts.config);
    c["expression"] = opts.expression;
    c["outcomes"] = opts.outcomes;
    c["raw_scale"] = opts.raw_scale;
    return c;
}

std::string cv_csv(const CVResult& cv)
{
    std::ostringstream s;
    s << "K,mean_mse,sd_mse";
    for (std::size_t f = 0; f < cv.fold_mse.size(); ++f) s << ",fold_" << f + 1;
    s << '\n';
    for (std::size_t g = 0; g < cv.k_grid.size(); ++g) {
        s << cv.k_grid[g] << ',' << io::format_double(cv.mean_mse[g]) << ','
          << io::format_double(cv.sd_mse[g]);
        for (const auto& fold : cv.fold_mse) s << ',' << io::format_double(fold[g]);
        s << '\n';
    }
    return s.str();
}

} // namespace

std::vector<int> parse_k_grid(const std::string& spec, int k_max)
{
    if (spec.empty()) return default_k_grid(k_max);
    std::vector<int> grid;
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::istringstream in(spec);
        std::string part;
        while (std::getline(in, part, ':')) parts.push_back(part);
        if (parts.size() != 3) throw validation_error({"k-grid range must be start:stop:step"});
        const int a = parse_int(parts[0], "k-grid start");
        const int b = parse_int(parts[1], "k-grid stop");
        const int step = parse_int(parts[2], "k-grid step");
        if (step <= 0) throw validation_error({"k-grid step must be positive"});
        for (int k = a; k <= b; k += step) grid.push_back(k);
    } else {
        for (const auto& s : split_list(spec)) grid.push_back(parse_int(s, "k-grid value"));
    }
    return grid;
}

OutputSet cmd_fit(const FitOptions& opts)
{
    const auto data = load(opts);
    const auto fit = gee_tgdr_fit(data.used, opts.config);
    OutputSet out;
    emit_fit(out, data, opts, fit);
    add_manifest(out, "fit", fit_manifest_config(opts), {opts.expression, opts.outcomes},
                 opts.config.rng_seed);
    return out;
}

OutputSet cmd_cv(const CvOptions& opts)
{
    const auto data = load(opts.fit);
    const auto grid = parse_k_grid(opts.k_grid, opts.fit.config.k_max);
    // Standardization happens inside each fold, on the raw covariates.
    const auto cv = cross_validate(data.raw, opts.fit.config, opts.folds, grid, opts.fit.config.rng_seed);
    FitOptions refit = opts.fit;
    refit.config.k_max = cv.best_k;
    const auto fit = gee_tgdr_fit(data.used, refit.config);

    OutputSet out;
    out["cv.csv"] = cv_csv(cv);
    emit_fit(out, data, refit, fit);
    auto cfg = fit_manifest_config(refit);
    cfg["folds"] = opts.folds;
    cfg["k_grid"] = grid;
    cfg["best_k"] = cv.best_k;
    cfg["fold_assignments"] = cv.fold_assignments;
    add_manifest(out, "cv", cfg, {opts.fit.expression, opts.fit.outcomes}, opts.fit.config.rng_seed);
    return out;
}

OutputSet cmd_compare(const CvOptions& opts)
{
    const auto ds = io::load_dataset(opts.fit.expression, opts.fit.outcomes);
    const auto grid = parse_k_grid(opts.k_grid, opts.fit.config.k_max);
    const auto cmp = compare_structures(ds, opts.fit.config, opts.folds, grid, opts.fit.config.rng_seed);

    std::ostringstream table;
    table << "structure,cv_mean_mse,cv_sd_mse,alldata_mse";
    for (const auto& l : ds.time_labels()) table << ',' << io::csv_field(l);
    table << '\n';
    ordered_json rows = ordered_json::array();
    for (const auto& row : cmp.rows) {
        table << to_string(row.structure);
        ordered_json jr = {{"structure", to_string(row.structure)}};
        if (row.ok()) {
            const auto g = static_cast<std::size_t>(
                std::find(row.cv->k_grid.begin(), row.cv->k_grid.end(), row.cv->best_k) - row.cv->k_grid.begin());
            table << ',' << io::format_double(row.cv->mean_mse[g]) << ','
                  << io::format_double(row.cv->sd_mse[g]) << ',' << io::format_double(row.alldata_mse);
            for (const auto& names : row.selected_names) {
                std::string joined;
                for (const auto& nm : names) joined += (joined.empty() ? "" : " ") + nm;
                table << ',' << io::csv_field(joined);
            }
            jr["best_k"] = row.cv->best_k;
            jr["fold_mse_at_best_k"] = [&] {
                std::vector<double> v;
                for (const auto& f : row.cv->fold_mse) v.push_back(f[g]);
                return v;
            }();
            jr["error"] = nullptr;
        } else {
            table << ",NA,NA,NA";
            for (Index j = 0; j < ds.n_times(); ++j) table << ",NA";
            jr["error"] = row.error_message;
            std::cerr << "geetgdr compare: structure " << to_string(row.structure)
                      << " failed: " << row.error_message << '\n';
        }
        table << '\n';
        rows.push_back(std::move(jr));
    }
    OutputSet out;
    out["table1.csv"] = table.str();
    out["compare_report.json"] = dump({{"mse_convention", "sum of squared residuals / (n * t)"},
                                       {"alldata_mse", "training MSE of the whole-data refit at best K"},
                                       {"structures", rows}});
    auto cfg = fit_manifest_config(opts.fit);
    cfg.erase("structure");
    cfg["folds"] = opts.folds;
    cfg["k_grid"] = grid;
    add_manifest(out, "compare", cfg, {opts.fit.expression, opts.fit.outcomes}, opts.fit.config.rng_seed);
    return out;
}

OutputSet cmd_simulate(const SimulateOptions& opts)
{
    SimulationSpec spec;
    spec.n = opts.n;
    spec.p = opts.p;
    spec.t = opts.t;
    spec.seed = opts.seed;
    for (const auto& s : split_list(opts.support)) spec.true_support.push_back(parse_int(s, "support index") - 1);
    spec.true_beta = sparse_beta(spec.t, spec.p, spec.true_support, opts.coef);
    const auto kind = parse_correlation_kind(opts.structure);
    switch (kind) {
        case CorrelationKind::independent: spec.noise_correlation = WorkingCorrelation::independent(); break;
        case CorrelationKind::exchangeable: spec.noise_correlation = WorkingCorrelation::exchangeable(opts.alpha); break;
        case CorrelationKind::ar1: spec.noise_correlation = WorkingCorrelation::ar1(opts.alpha); break;
        case CorrelationKind::unstructured:
            throw validation_error({"simulate supports ar1, exchangeable and independent noise"});
    }
    const auto sds = split_list(opts.noise_sd);
    spec.noise_sd.resize(spec.t);
    if (sds.size() == 1) {
        spec.noise_sd.setConstant(io::parse_double(sds[0], "--noise-sd", 0, 0));
    } else if (static_cast<long>(sds.size()) == opts.t) {
        for (std::size_t j = 0; j < sds.size(); ++j) spec.noise_sd(static_cast<Index>(j)) = io::parse_double(sds[j], "--noise-sd", 0, j + 1);
    } else {
        throw validation_error({"--noise-sd needs 1 or t values"});
    }

    const auto sim = generate(spec);
    OutputSet out;
    std::ostringstream expr, outc;
    io::write_dataset(sim.data, expr, outc);
    out["expression.csv"] = expr.str();
    out["outcomes.csv"] = outc.str();

    std::vector<std::string> support_names;
    for (auto f : sim.truth.support) support_names.push_back(sim.data.feature_names()[static_cast<std::size_t>(f)]);
    ordered_json beta = ordered_json::array();
    for (Index j = 0; j < spec.t; ++j) {
        ordered_json row = {{"time_label", sim.data.time_labels()[static_cast<std::size_t>(j)]},
                            {"intercept", sim.truth.beta(j, 0)}};
        ordered_json coefs = ordered_json::object();
        for (auto f : sim.truth.support) coefs[sim.data.feature_names()[static_cast<std::size_t>(f)]] = sim.truth.beta(j, f + 1);
        row["coefficients"] = std::move(coefs);
        beta.push_back(std::move(row));
    }
    out["truth.json"] = dump({{"support", support_names},
                              {"support_indices", [&] {
                                   std::vector<Index> v;
                                   for (auto f : sim.truth.support) v.push_back(f + 1);
                                   return v;
                               }()},
                              {"beta", beta},
                              {"noise", {{"structure", opts.structure},
                                         {"alpha", kind == CorrelationKind::independent ? 0.0 : opts.alpha},
                                         {"sd", std::vector<double>(spec.noise_sd.data(), spec.noise_sd.data() + spec.t)}}},
                              {"rng", "std::mt19937_64 + std::normal_distribution; covariates row-major, then noise row-major"}});
    ordered_json cfg = {{"n", opts.n}, {"p", opts.p}, {"t", opts.t}, {"structure", opts.structure},
                        {"alpha", opts.alpha}, {"support", opts.support}, {"coef", opts.coef},
                        {"noise_sd", opts.noise_sd}};
    add_manifest(out, "simulate", cfg, {}, opts.seed);
    return out;
}

OutputSet cmd_assoc(const AssocOptions& opts)
{
    const auto expr = io::to_labeled_matrix(io::read_csv(opts.expression));
    const auto targets = io::to_labeled_matrix(io::read_csv(opts.targets));
    const Matrix target_values = io::align_rows(targets, expr.row_ids, opts.targets, opts.expression);

    std::vector<std::string> panel_names;
    if (!opts.features.empty()) {
        panel_names = split_list(opts.features);
    } else if (!opts.selection.empty()) {
        const auto sel = io::read_csv(opts.selection);
        if (sel.header.empty() || sel.header.front() != "feature" || sel.header.back() != "union") {
            throw io::input_error(opts.selection, 1, 0, "expected a selection.csv with 'feature' and 'union' columns");
        }
        for (const auto& row : sel.rows) {
            if (row.fields.back() == "1") panel_names.push_back(row.fields.front());
        }
    } else {
        throw validation_error({"assoc needs --selection or --features"});
    }
    if (panel_names.empty()) throw validation_error({"assoc: the feature panel is empty"});

    Matrix panel(expr.values.rows(), static_cast<Index>(panel_names.size()));
    for (std::size_t k = 0; k < panel_names.size(); ++k) {
        const auto it = std::find(expr.col_names.begin(), expr.col_names.end(), panel_names[k]);
        if (it == expr.col_names.end()) {
            throw io::input_error(opts.expression, 1, 0, "panel feature '" + panel_names[k] + "' not found");
        }
        panel.col(static_cast<Index>(k)) = expr.values.col(it - expr.col_names.begin());
    }
    const auto edges = correlate_panel(panel, panel_names, target_values, targets.col_names, opts.rho_min, opts.fdr);

    std::ostringstream csv;
    csv << "source,target,rho,p,p_adjusted\n";
    for (const auto& e : edges.edges) {
        csv << io::csv_field(e.source) << ',' << io::csv_field(e.target) << ','
            << io::format_double(e.rho) << ',' << io::format_double(e.p_value) << ','
            << io::format_double(e.p_adjusted) << '\n';
    }
    OutputSet out;
    out["edges.csv"] = csv.str();
    out["assoc_report.json"] = dump({{"rho_min", opts.rho_min},
                                     {"fdr_q", opts.fdr},
                                     {"fdr_family", "all panel x target pairs with a defined correlation"},
                                     {"tests", edges.tests},
                                     {"undefined_pairs", edges.undefined},
                                     {"edges", edges.edges.size()},
                                     {"p_value_method", "t approximation, n - 2 degrees of freedom"}});
    ordered_json cfg = {{"expression", opts.expression}, {"targets", opts.targets},
                        {"selection", opts.selection}, {"features", opts.features},
                        {"rho_min", opts.rho_min}, {"fdr", opts.fdr}};
    std::vector<std::string> inputs = {opts.expression, opts.targets};
    if (!opts.selection.empty() && opts.features.empty()) inputs.push_back(opts.selection);
    add_manifest(out, "assoc", cfg, inputs, 0);
    return out;
}

void write_outputs(const std::string& dir, const OutputSet& outputs)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (const auto& [name, contents] : outputs) {
        const auto path = fs::path(dir) / name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << contents;
        if (!f) throw error("cannot write " + path.string());
    }
}

namespace {

void add_fit_flags(CLI::App* cmd, FitOptions& o, std::string& structure)
{
    cmd->add_option("--expression", o.expression, "expression.csv (subject_id + features)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--outcomes", o.outcomes, "outcomes.csv (subject_id + time labels)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--structure", structure, "ar1 | exchangeable | unstructured | independent")
        ->check(CLI::IsMember({"ar1", "exchangeable", "unstructured", "independent"}));
    cmd->add_option("--tau", o.config.tau, "threshold fraction in [0, 1]")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--dv", o.config.dv, "step increment");
    cmd->add_option("--kmax", o.config.k_max, "iteration budget K");
    cmd->add_option("--seed", o.config.rng_seed, "seed for fold assignment");
    cmd->add_option("--out", o.out_dir, "output directory")->required();
    cmd->add_flag("--no-standardize", [&o](std::int64_t) { o.config.standardize = false; }, "fit on raw covariates");
    cmd->add_flag("--raw-scale", o.raw_scale, "report coefficients on the raw covariate scale");
}

} // namespace

int run(int argc, char** argv)
{
    CLI::App app{"GEE-TGDR longitudinal feature selection"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    FitOptions fit_opts;
    CvOptions cv_opts;
    CvOptions cmp_opts;
    SimulateOptions sim_opts;
    AssocOptions assoc_opts;
    std::string fit_structure = "exchangeable", cv_structure = "exchangeable", cmp_structure;

    auto* fit = app.add_subcommand("fit", "fit GEE-TGDR at a fixed K");
    add_fit_flags(fit, fit_opts, fit_structure);

    auto* cv = app.add_subcommand("cv", "choose K by cross-validation, then refit");
    add_fit_flags(cv, cv_opts.fit, cv_structure);
    cv->add_option("--k-grid", cv_opts.k_grid, "start:stop:step or comma list (default 0..kmax)");
    cv->add_option("--folds", cv_opts.folds, "number of folds");

    auto* cmp = app.add_subcommand("compare", "cross-validate all four working correlations");
    add_fit_flags(cmp, cmp_opts.fit, cmp_structure);
    cmp->add_option("--k-grid", cmp_opts.k_grid, "start:stop:step or comma list (default 0..kmax)");
    cmp->add_option("--folds", cmp_opts.folds, "number of folds");

    auto* sim = app.add_subcommand("simulate", "generate a synthetic longitudinal dataset");
    sim->add_option("--n", sim_opts.n, "subjects");
    sim->add_option("--p", sim_opts.p, "features");
    sim->add_option("--t", sim_opts.t, "time points");
    sim->add_option("--structure", sim_opts.structure, "noise correlation: ar1 | exchangeable | independent");
    sim->add_option("--alpha", sim_opts.alpha, "noise correlation parameter");
    sim->add_option("--support", sim_opts.support, "1-based true feature indices, comma separated");
    sim->add_option("--coef", sim_opts.coef, "true coefficient magnitude (signs alternate)");
    sim->add_option("--noise-sd", sim_opts.noise_sd, "noise sd, one value or one per time point");
    sim->add_option("--seed", sim_opts.seed, "random seed");
    sim->add_option("--out", sim_opts.out_dir, "output directory")->required();

    auto* assoc = app.add_subcommand("assoc", "Spearman/BH edge list between a feature panel and targets");
    assoc->add_option("--expression", assoc_opts.expression, "expression.csv holding the panel features")->required()->check(CLI::ExistingFile);
    assoc->add_option("--targets", assoc_opts.targets, "second expression matrix (subject_id + genes)")->required()->check(CLI::ExistingFile);
    assoc->add_option("--selection", assoc_opts.selection, "selection.csv from fit/cv; union members form the panel")->check(CLI::ExistingFile);
    assoc->add_option("--features", assoc_opts.features, "comma-separated panel feature names");
    assoc->add_option("--rho-min", assoc_opts.rho_min, "minimum |rho|");
    assoc->add_option("--fdr", assoc_opts.fdr, "BH FDR cutoff");
    assoc->add_option("--out", assoc_opts.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        OutputSet out;
        std::string dir;
        if (*fit) {
            fit_opts.config.structure = parse_correlation_kind(fit_structure);
            out = cmd_fit(fit_opts);
            dir = fit_opts.out_dir;
        } else if (*cv) {
            cv_opts.fit.config.structure = parse_correlation_kind(cv_structure);
            out = cmd_cv(cv_opts);
            dir = cv_opts.fit.out_dir;
        } else if (*cmp) {
            out = cmd_compare(cmp_opts);
            dir = cmp_opts.fit.out_dir;
        } else if (*sim) {
            out = cmd_simulate(sim_opts);
            dir = sim_opts.out_dir;
        } else if (*assoc) {
            out = cmd_assoc(assoc_opts);
            dir = assoc_opts.out_dir;
        }
        write_outputs(dir, out);
    } catch (const validation_error& e) {
        for (const auto& p : e.problems()) std::cerr << "geetgdr: error: " << p << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "geetgdr: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace geetgdr::cli
