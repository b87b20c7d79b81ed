// Command-line front end: dataset diagnostics, cross-validated training,
// (C, gamma) grid search, tuning-stability curves, and kernel-family
// comparisons, all emitted as reproducible JSON/CSV artifacts.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <ckrbf/ckrbf.hpp>

namespace fs = std::filesystem;
using ckrbf::ordered_json;

namespace {

struct Config {
    std::string command;
    std::string dataset;
    std::string kernel = "ckrbf";
    std::vector<std::string> kernels = {"rbf", "mrbf", "ckrbf"};
    int k = 2;
    double gamma = 1.0;
    double c = 1.0;
    double eps = 1e-10;
    int folds = 10;
    std::uint64_t seed = 0;
    std::string mode = "transductive";
    int jobs = 1;
    std::string format = "json";
    std::string out;
    std::vector<double> c_grid;
    std::vector<double> gamma_grid;
};

fs::path output_dir(const Config& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    if (const char* env = std::getenv("CKRBF_OUT_DIR")) return env;
    return ".";
}

// Artifacts are staged in memory and written only after the whole run has
// succeeded, so a failing run leaves no partial outputs behind.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

    void stage(const std::string& name, std::string content) {
        staged_.emplace_back(name, std::move(content));
    }

    void commit() {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        std::vector<fs::path> written;
        for (const auto& [name, content] : staged_) {
            const fs::path target = dir_ / name;
            std::ofstream out(target, std::ios::binary | std::ios::trunc);
            out << content;
            out.flush();
            if (!out) {
                for (const auto& p : written) fs::remove(p, ec);
                fs::remove(target, ec);
                throw ckrbf::DataError("cannot write output file " + target.string());
            }
            written.push_back(target);
        }
        for (const auto& [name, content] : staged_)
            std::cout << "wrote " << (dir_ / name).string() << '\n';
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> staged_;
};

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json version_record() {
    ordered_json v;
    v["ckrbf"] = ckrbf::version;
    v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                 "." + std::to_string(EIGEN_MINOR_VERSION);
    v["cli11"] = CLI11_VERSION;
    v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                         std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    return v;
}

// Config echo + seeds + versions: everything needed to reproduce the run
// byte-identically. Deliberately excludes the output directory and any
// timestamps so reruns compare equal.
ordered_json manifest(const Config& cfg) {
    ordered_json m;
    m["command"] = cfg.command;
    m["dataset"] = cfg.dataset;
    ordered_json opt;
    opt["kernel"] = cfg.kernel;
    opt["kernels"] = cfg.kernels;
    opt["k"] = cfg.k;
    opt["gamma"] = cfg.gamma;
    opt["c"] = cfg.c;
    opt["eps"] = cfg.eps;
    opt["folds"] = cfg.folds;
    opt["seed"] = cfg.seed;
    opt["mode"] = cfg.mode;
    opt["jobs"] = cfg.jobs;
    opt["format"] = cfg.format;
    opt["c_grid"] = cfg.c_grid;
    opt["gamma_grid"] = cfg.gamma_grid;
    m["options"] = std::move(opt);
    m["versions"] = version_record();
    return m;
}

ckrbf::GridSpec grid_from(const Config& cfg) {
    if (cfg.c_grid.empty() && cfg.gamma_grid.empty()) return ckrbf::default_grid();
    ckrbf::GridSpec g = ckrbf::default_grid();
    if (!cfg.c_grid.empty()) g.c_values = cfg.c_grid;
    if (!cfg.gamma_grid.empty()) g.gamma_values = cfg.gamma_grid;
    return g;
}

ckrbf::KernelSpec spec_from(const Config& cfg, const std::string& family) {
    ckrbf::KernelSpec spec;
    spec.family = ckrbf::parse_family(family);
    spec.k = cfg.k;
    spec.gamma = cfg.gamma;
    spec.eps = cfg.eps;
    spec.seed = cfg.seed;
    return spec;
}

// The per-cluster baseline is always clustered transductively; every other
// family honours the requested mode.
ckrbf::CvReport report_for(const ckrbf::Dataset& ds, const Config& cfg,
                           const std::string& family, double gamma, double C,
                           const ckrbf::FoldPlan& plan) {
    const auto spec = spec_from(cfg, family);
    if (spec.family == ckrbf::KernelFamily::mkrbf)
        return ckrbf::mk_rbf_baseline_report(ds, cfg.k, C, gamma, plan, cfg.eps, cfg.seed);
    ckrbf::KernelSpec s = spec;
    s.gamma = gamma;
    return ckrbf::cross_validate_report(ds, s, C, plan, ckrbf::parse_mode(cfg.mode));
}

// Grid evaluation for any family. The single-kernel families share pair
// tables across the sweep; the per-cluster baseline is evaluated cellwise.
ckrbf::GridResult run_grid(const ckrbf::Dataset& ds, const Config& cfg, const std::string& family,
                           const ckrbf::GridSpec& grid, const ckrbf::FoldPlan& plan) {
    const auto spec = spec_from(cfg, family);
    if (spec.family != ckrbf::KernelFamily::mkrbf)
        return ckrbf::grid_search(ds, spec, grid, plan, ckrbf::parse_mode(cfg.mode), 1e-3,
                                  cfg.jobs);
    ckrbf::validate(grid);
    ckrbf::GridResult result;
    result.spec = grid;
    result.kernel_id = ckrbf::kernel_id(spec);
    result.dataset_id = ds.name;
    result.folds = plan.fold_count;
    result.seed = spec.seed;
    const auto nc = static_cast<Eigen::Index>(grid.c_values.size());
    const auto ng = static_cast<Eigen::Index>(grid.gamma_values.size());
    result.scores.resize(nc, ng);
    for (Eigen::Index ci = 0; ci < nc; ++ci)
        for (Eigen::Index gj = 0; gj < ng; ++gj)
            result.scores(ci, gj) = ckrbf::mk_rbf_baseline(
                ds, cfg.k, grid.c_values[static_cast<std::size_t>(ci)],
                grid.gamma_values[static_cast<std::size_t>(gj)], plan, cfg.eps, cfg.seed);
    return result;
}

// Transductive runs score points scaled together with the training data, so
// the whole feature matrix is scaled up front; the strict mode re-fits the
// scaler inside every training fold instead and must see the raw features.
ckrbf::Dataset load_prepared(const Config& cfg, bool prescale) {
    ckrbf::Dataset ds = ckrbf::load_dataset(cfg.dataset);
    if (prescale) return ckrbf::scale_unit_interval(ds);
    return ds;
}

int cmd_diagnose(const Config& cfg) {
    const auto ds = ckrbf::scale_unit_interval(ckrbf::load_dataset(cfg.dataset));
    const auto diag = ckrbf::dataset_diagnostics(ds, cfg.seed);

    ordered_json j = ckrbf::to_json(diag);
    ArtifactWriter writer(output_dir(cfg));
    writer.stage("manifest.json", dump(manifest(cfg)));
    writer.stage("diagnose.json", dump(j));
    if (cfg.format == "csv") {
        std::ostringstream csv;
        ckrbf::write_diagnostics_csv(csv, diag);
        writer.stage("diagnose.csv", csv.str());
    }
    std::cout << ds.name << ": d=" << diag.d << " n=" << (diag.n_neg + diag.n_pos)
              << " (" << diag.n_neg << " negative, " << diag.n_pos << " positive)\n";
    writer.commit();
    return 0;
}

int cmd_train(const Config& cfg) {
    const auto ds = load_prepared(cfg, cfg.mode == "transductive");
    const auto plan = ckrbf::stratified_kfold(ds, cfg.folds, cfg.seed);
    const auto report = report_for(ds, cfg, cfg.kernel, cfg.gamma, cfg.c, plan);

    ordered_json j;
    j["dataset"] = ds.name;
    j["kernel"] = ckrbf::kernel_id(spec_from(cfg, cfg.kernel));
    j["mode"] = cfg.mode;
    j["gamma"] = cfg.gamma;
    j["c"] = cfg.c;
    j["report"] = ckrbf::to_json(report);

    ArtifactWriter writer(output_dir(cfg));
    writer.stage("manifest.json", dump(manifest(cfg)));
    writer.stage("train.json", dump(j));
    if (cfg.format == "csv") {
        std::ostringstream csv;
        csv << "fold,accuracy\n";
        for (std::size_t i = 0; i < report.fold_accuracy.size(); ++i)
            csv << i << ',' << ckrbf::detail::format_double(report.fold_accuracy[i]) << '\n';
        writer.stage("train.csv", csv.str());
    }
    std::cout << "mean accuracy " << ckrbf::detail::format_double(report.mean_accuracy) << " over "
              << report.fold_accuracy.size() << " of " << report.folds << " folds\n";
    writer.commit();
    return 0;
}

int cmd_grid(const Config& cfg) {
    const auto ds = load_prepared(cfg, cfg.mode == "transductive");
    const auto plan = ckrbf::stratified_kfold(ds, cfg.folds, cfg.seed);
    const auto result = run_grid(ds, cfg, cfg.kernel, grid_from(cfg), plan);

    ArtifactWriter writer(output_dir(cfg));
    writer.stage("manifest.json", dump(manifest(cfg)));
    writer.stage("grid.json", dump(ckrbf::to_json(result)));
    std::ostringstream heatmap;
    ckrbf::write_heatmap_csv(heatmap, result);
    writer.stage("heatmap.csv", heatmap.str());
    if (cfg.format == "csv") {
        std::ostringstream csv;
        ckrbf::write_matrix_csv(csv, result.scores);
        writer.stage("grid.csv", csv.str());
    }
    std::cout << "best accuracy " << ckrbf::detail::format_double(result.best_score()) << " for "
              << result.kernel_id << " on " << result.dataset_id << '\n';
    writer.commit();
    return 0;
}

int cmd_pf(const Config& cfg) {
    const auto ds = load_prepared(cfg, cfg.mode == "transductive");
    const auto plan = ckrbf::stratified_kfold(ds, cfg.folds, cfg.seed);
    const auto result = run_grid(ds, cfg, cfg.kernel, grid_from(cfg), plan);
    const auto curve = ckrbf::pf_curve(result);
    const double auc = ckrbf::pf_auc({curve})[0];

    ordered_json j;
    j["dataset"] = result.dataset_id;
    j["kernel"] = result.kernel_id;
    j["folds"] = result.folds;
    j["seed"] = result.seed;
    j["grid"] = ckrbf::to_json(result.spec);
    j["curve"] = ckrbf::to_json(curve);
    j["auc"] = auc;

    ArtifactWriter writer(output_dir(cfg));
    writer.stage("manifest.json", dump(manifest(cfg)));
    writer.stage("pf.json", dump(j));
    std::ostringstream csv;
    ckrbf::write_pf_csv(csv, curve);
    writer.stage("pf.csv", csv.str());
    std::cout << "stability area " << ckrbf::detail::format_double(auc) << " over "
              << curve.thresholds.size() << " thresholds\n";
    writer.commit();
    return 0;
}

int cmd_compare(const Config& cfg) {
    if (cfg.kernels.empty()) throw ckrbf::ArgumentError("compare needs at least one kernel");
    const auto ds = load_prepared(cfg, cfg.mode == "transductive");
    const auto plan = ckrbf::stratified_kfold(ds, cfg.folds, cfg.seed);

    // Fixed-cost protocol (C = 1, six gamma triples) for the win table, plus
    // one full grid per family for the stability comparison.
    const auto triples = ckrbf::gamma_triple_grids();
    std::vector<std::vector<ckrbf::GridResult>> triple_results;
    std::vector<ckrbf::GridResult> main_results;
    std::vector<ckrbf::PfCurve> curves;
    std::vector<std::string> ids;
    for (const auto& family : cfg.kernels) {
        std::vector<ckrbf::GridResult> per_family;
        for (const auto& triple : triples) per_family.push_back(run_grid(ds, cfg, family, triple, plan));
        triple_results.push_back(std::move(per_family));
        main_results.push_back(run_grid(ds, cfg, family, grid_from(cfg), plan));
        curves.push_back(ckrbf::pf_curve(main_results.back()));
        ids.push_back(main_results.back().kernel_id);
    }
    const auto aucs = ckrbf::pf_auc(curves);

    ordered_json j;
    j["dataset"] = ds.name;
    j["folds"] = plan.fold_count;
    j["seed"] = cfg.seed;
    j["mode"] = cfg.mode;
    j["families"] = ids;
    ordered_json triple_best;
    for (std::size_t f = 0; f < ids.size(); ++f) {
        std::vector<double> best;
        for (const auto& r : triple_results[f]) best.push_back(r.best_score());
        triple_best[ids[f]] = best;
    }
    j["triple_best"] = std::move(triple_best);
    ordered_json wins = ordered_json::array();
    std::ostringstream win_csv;
    win_csv << "family_a,family_b,win_percentage\n";
    for (std::size_t a = 0; a < ids.size(); ++a)
        for (std::size_t b = 0; b < ids.size(); ++b) {
            if (a == b) continue;
            const double w = ckrbf::win_percentage(triple_results[a], triple_results[b]);
            ordered_json row;
            row["family_a"] = ids[a];
            row["family_b"] = ids[b];
            row["win_percentage"] = w;
            wins.push_back(std::move(row));
            win_csv << ids[a] << ',' << ids[b] << ',' << ckrbf::detail::format_double(w) << '\n';
        }
    j["win_percentage"] = std::move(wins);
    ordered_json auc_map;
    for (std::size_t f = 0; f < ids.size(); ++f) auc_map[ids[f]] = aucs[f];
    j["auc"] = std::move(auc_map);
    ordered_json best_map;
    for (std::size_t f = 0; f < ids.size(); ++f) best_map[ids[f]] = main_results[f].best_score();
    j["best_score"] = std::move(best_map);

    ArtifactWriter writer(output_dir(cfg));
    writer.stage("manifest.json", dump(manifest(cfg)));
    writer.stage("compare.json", dump(j));
    if (cfg.format == "csv") writer.stage("compare.csv", win_csv.str());
    for (std::size_t f = 0; f < ids.size(); ++f)
        std::cout << ids[f] << ": best " << ckrbf::detail::format_double(main_results[f].best_score())
                  << ", stability area " << ckrbf::detail::format_double(aucs[f]) << '\n';
    writer.commit();
    return 0;
}

int run(const Config& cfg) {
    if (cfg.command == "diagnose") return cmd_diagnose(cfg);
    if (cfg.command == "train") return cmd_train(cfg);
    if (cfg.command == "grid") return cmd_grid(cfg);
    if (cfg.command == "pf") return cmd_pf(cfg);
    if (cfg.command == "compare") return cmd_compare(cfg);
    throw ckrbf::ArgumentError("unknown command '" + cfg.command + "'");
}

void add_common(CLI::App* sub, Config& cfg, bool with_grid) {
    sub->add_option("dataset", cfg.dataset, "dataset file (libsvm or csv)")->required();
    sub->add_option("--kernel", cfg.kernel, "kernel family: rbf|mrbf|ckrbf|ckrbf-radial|mkrbf");
    sub->add_option("--k", cfg.k, "number of clusters");
    sub->add_option("--gamma", cfg.gamma, "kernel bandwidth");
    sub->add_option("--c", cfg.c, "SVM cost");
    sub->add_option("--eps", cfg.eps, "covariance regularization epsilon");
    sub->add_option("--folds", cfg.folds, "cross-validation folds");
    sub->add_option("--seed", cfg.seed, "RNG seed for folds and clustering");
    sub->add_option("--mode", cfg.mode, "clustering mode: transductive|strict")
        ->check(CLI::IsMember({"transductive", "strict"}));
    sub->add_option("--format", cfg.format, "extra tabular output: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", cfg.out, "output directory (default: $CKRBF_OUT_DIR or .)");
    if (with_grid) {
        sub->add_option("--jobs", cfg.jobs, "parallel grid columns");
        sub->add_option("--c-grid", cfg.c_grid, "comma-separated C grid")->delimiter(',');
        sub->add_option("--gamma-grid", cfg.gamma_grid, "comma-separated gamma grid")
            ->delimiter(',');
    }
}

}  // namespace

int main(int argc, char** argv) {
    Config cfg;
    CLI::App app{"Cluster-covariance RBF kernels and SVM benchmarking"};
    app.require_subcommand(1);

    auto* diagnose = app.add_subcommand("diagnose", "two-cluster covariance geometry of a dataset");
    add_common(diagnose, cfg, false);
    auto* train = app.add_subcommand("train", "cross-validated accuracy of one configuration");
    add_common(train, cfg, false);
    auto* grid = app.add_subcommand("grid", "(C, gamma) grid search with heatmap output");
    add_common(grid, cfg, true);
    auto* pf = app.add_subcommand("pf", "tuning-stability curve and its area");
    add_common(pf, cfg, true);
    auto* compare = app.add_subcommand("compare", "win percentage and stability across families");
    add_common(compare, cfg, true);
    compare->add_option("--kernels", cfg.kernels, "comma-separated kernel families")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    cfg.command = app.get_subcommands().front()->get_name();

    try {
        return run(cfg);
    } catch (const ckrbf::ArgumentError& e) {
        std::cerr << "error (usage): " << e.what() << '\n';
        return 1;
    } catch (const ckrbf::ConvergenceError& e) {
        std::cerr << "error (convergence): " << e.what() << '\n';
        return 3;
    } catch (const ckrbf::DataError& e) {
        std::cerr << "error (data): " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
