#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ckrbf/clustering.hpp"
#include "ckrbf/dataset.hpp"
#include "ckrbf/error.hpp"
#include "ckrbf/kernel.hpp"
#include "ckrbf/svm.hpp"

namespace ckrbf {

enum class KernelFamily { rbf, mrbf, ckrbf, ckrbf_radial, mkrbf };

inline std::string family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::rbf: return "rbf";
        case KernelFamily::mrbf: return "mrbf";
        case KernelFamily::ckrbf: return "ckrbf";
        case KernelFamily::ckrbf_radial: return "ckrbf-radial";
        case KernelFamily::mkrbf: return "mkrbf";
    }
    throw ArgumentError("unknown kernel family");
}

inline KernelFamily parse_family(const std::string& s) {
    if (s == "rbf") return KernelFamily::rbf;
    if (s == "mrbf") return KernelFamily::mrbf;
    if (s == "ckrbf") return KernelFamily::ckrbf;
    if (s == "ckrbf-radial") return KernelFamily::ckrbf_radial;
    if (s == "mkrbf") return KernelFamily::mkrbf;
    throw ArgumentError("unknown kernel family '" + s + "'");
}

// Whether cluster/covariance structure is estimated once on all features
// (the reproduction default) or rebuilt per training fold, including the
// [0,1] feature scaling.
enum class ClusteringMode { transductive, strict_folds };

inline std::string mode_name(ClusteringMode m) {
    return m == ClusteringMode::transductive ? "transductive" : "strict";
}

inline ClusteringMode parse_mode(const std::string& s) {
    if (s == "transductive") return ClusteringMode::transductive;
    if (s == "strict") return ClusteringMode::strict_folds;
    throw ArgumentError("unknown clustering mode '" + s + "'");
}

// Everything needed to instantiate one kernel family on a feature set.
// `gamma` is the bandwidth; `k`, `eps`, `seed` matter only for the
// cluster-based families (and eps for mrbf).
struct KernelSpec {
    KernelFamily family = KernelFamily::ckrbf;
    int k = 2;
    double gamma = 1.0;
    double eps = 1e-10;
    std::uint64_t seed = 0;
};

inline std::string kernel_id(const KernelSpec& spec) {
    switch (spec.family) {
        case KernelFamily::rbf:
        case KernelFamily::mrbf: return family_name(spec.family);
        default: return family_name(spec.family) + "(" + std::to_string(spec.k) + ")";
    }
}

struct CvReport {
    std::vector<double> fold_accuracy;  // per evaluated fold
    std::vector<int> skipped_folds;     // folds with single-class training data
    double mean_accuracy = 0.0;
    int folds = 0;
};

namespace detail {

// One built kernel instance; produces gamma-independent pair tables so a
// gamma sweep only re-exponentiates.
struct KernelEngine {
    KernelFamily family = KernelFamily::rbf;
    RbfKernel rbf;
    MahalanobisRbfKernel mrbf;
    KernelModel ck;

    static KernelEngine build(const Eigen::MatrixXd& X, const KernelSpec& spec) {
        KernelEngine e;
        e.family = spec.family;
        switch (spec.family) {
            case KernelFamily::rbf:
                e.rbf = rbf_kernel(spec.gamma);
                break;
            case KernelFamily::mrbf:
                e.mrbf = mahalanobis_rbf_kernel(X, spec.gamma, spec.eps);
                break;
            case KernelFamily::ckrbf:
                e.ck = build_kernel(X, spec.k, spec.gamma, spec.eps, spec.seed);
                break;
            case KernelFamily::ckrbf_radial:
                e.ck = radial_variant(build_kernel(X, spec.k, spec.gamma, spec.eps, spec.seed));
                break;
            case KernelFamily::mkrbf:
                throw ArgumentError("mkrbf is a per-cluster baseline, not a single kernel");
        }
        return e;
    }

    KernelPairData pairs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
        switch (family) {
            case KernelFamily::rbf:
                return KernelPairData{Eigen::MatrixXd::Ones(A.rows(), B.rows()), rbf.quad(A, B)};
            case KernelFamily::mrbf:
                return KernelPairData{Eigen::MatrixXd::Ones(A.rows(), B.rows()), mrbf.quad(A, B)};
            default:
                return make_pair_data(ck, A, B);
        }
    }
};

inline KernelPairData slice_pairs(const KernelPairData& full, const std::vector<int>& rows,
                                  const std::vector<int>& cols) {
    return KernelPairData{full.norm(rows, cols), full.quad(rows, cols)};
}

inline bool has_both_classes(const Eigen::VectorXd& y) {
    return (y.array() == 1.0).any() && (y.array() == -1.0).any();
}

// Train on the given pair tables at (gamma, C) and score the test block.
inline double fold_accuracy(const KernelPairData& train_pairs, const KernelPairData& test_pairs,
                            const Eigen::VectorXd& y_train, const Eigen::VectorXd& y_test,
                            double gamma, double C, double tol) {
    SvmProblem problem;
    problem.gram = gram_from_pairs(train_pairs, gamma);
    problem.labels = y_train;
    problem.C = C;
    problem.tol = tol;
    const SvmModel model = train_svc(problem);
    const Eigen::VectorXd pred = predict(model, gram_from_pairs(test_pairs, gamma));
    return (pred.array() == y_test.array()).cast<double>().mean();
}

// Per-fold, gamma-independent tables plus label slices; built once and then
// evaluated at arbitrary (C, gamma).
struct FoldTables {
    std::vector<KernelPairData> train_pairs;
    std::vector<KernelPairData> test_pairs;
    std::vector<Eigen::VectorXd> y_train;
    std::vector<Eigen::VectorXd> y_test;
    std::vector<int> fold_index;    // original fold numbers of the rows above
    std::vector<int> skipped;       // folds dropped for single-class training data

    static FoldTables build(const Dataset& ds, const KernelSpec& spec, const FoldPlan& plan,
                            ClusteringMode mode) {
        FoldTables ft;
        std::unique_ptr<KernelEngine> shared_engine;
        std::unique_ptr<KernelPairData> shared_pairs;
        if (mode == ClusteringMode::transductive) {
            shared_engine = std::make_unique<KernelEngine>(
                KernelEngine::build(ds.features, spec));
            shared_pairs = std::make_unique<KernelPairData>(
                shared_engine->pairs(ds.features, ds.features));
        }
        for (std::size_t f = 0; f < plan.folds.size(); ++f) {
            const auto& [train, test] = plan.folds[f];
            Eigen::VectorXd y_tr(static_cast<Eigen::Index>(train.size()));
            for (std::size_t r = 0; r < train.size(); ++r)
                y_tr[static_cast<Eigen::Index>(r)] = ds.labels[train[r]];
            if (!has_both_classes(y_tr)) {
                std::cerr << "warning: fold " << f
                          << " has single-class training data; skipped\n";
                ft.skipped.push_back(static_cast<int>(f));
                continue;
            }
            Eigen::VectorXd y_te(static_cast<Eigen::Index>(test.size()));
            for (std::size_t r = 0; r < test.size(); ++r)
                y_te[static_cast<Eigen::Index>(r)] = ds.labels[test[r]];

            if (mode == ClusteringMode::transductive) {
                ft.train_pairs.push_back(slice_pairs(*shared_pairs, train, train));
                ft.test_pairs.push_back(slice_pairs(*shared_pairs, test, train));
            } else {
                Eigen::MatrixXd X_tr(static_cast<Eigen::Index>(train.size()), ds.dim());
                for (std::size_t r = 0; r < train.size(); ++r)
                    X_tr.row(static_cast<Eigen::Index>(r)) = ds.features.row(train[r]);
                Eigen::MatrixXd X_te(static_cast<Eigen::Index>(test.size()), ds.dim());
                for (std::size_t r = 0; r < test.size(); ++r)
                    X_te.row(static_cast<Eigen::Index>(r)) = ds.features.row(test[r]);
                const FeatureScaler scaler = FeatureScaler::fit(X_tr);
                X_tr = scaler.apply(X_tr);
                X_te = scaler.apply(X_te);
                const KernelEngine engine = KernelEngine::build(X_tr, spec);
                ft.train_pairs.push_back(engine.pairs(X_tr, X_tr));
                ft.test_pairs.push_back(engine.pairs(X_te, X_tr));
            }
            ft.y_train.push_back(std::move(y_tr));
            ft.y_test.push_back(std::move(y_te));
            ft.fold_index.push_back(static_cast<int>(f));
        }
        return ft;
    }

    CvReport evaluate(double gamma, double C, double tol, int total_folds) const {
        CvReport report;
        report.folds = total_folds;
        report.skipped_folds = skipped;
        for (std::size_t f = 0; f < train_pairs.size(); ++f)
            report.fold_accuracy.push_back(fold_accuracy(train_pairs[f], test_pairs[f],
                                                         y_train[f], y_test[f], gamma, C, tol));
        if (report.fold_accuracy.empty())
            throw DataError("every fold was skipped; no accuracy to report");
        report.mean_accuracy = 0.0;
        for (double a : report.fold_accuracy) report.mean_accuracy += a;
        report.mean_accuracy /= static_cast<double>(report.fold_accuracy.size());
        return report;
    }
};

}  // namespace detail

// Mean test accuracy over the folds of `plan`. Transductive mode builds the
// kernel once on all features and retrains only the SVM per fold; strict mode
// re-scales and rebuilds the kernel from each training fold.
inline CvReport cross_validate_report(const Dataset& ds, const KernelSpec& spec, double C,
                                      const FoldPlan& plan,
                                      ClusteringMode mode = ClusteringMode::transductive,
                                      double tol = 1e-3) {
    if (C <= 0.0) throw ArgumentError("C must be positive");
    const auto tables = detail::FoldTables::build(ds, spec, plan, mode);
    return tables.evaluate(spec.gamma, C, tol, plan.fold_count);
}

inline double cross_validate(const Dataset& ds, const KernelSpec& spec, double C,
                             const FoldPlan& plan,
                             ClusteringMode mode = ClusteringMode::transductive,
                             double tol = 1e-3) {
    return cross_validate_report(ds, spec, C, plan, mode, tol).mean_accuracy;
}

// Hyperparameter grid, both axes strictly increasing.
struct GridSpec {
    std::vector<double> c_values;
    std::vector<double> gamma_values;
};

inline void validate(const GridSpec& spec) {
    auto check = [](const std::vector<double>& v, const char* what) {
        if (v.empty()) throw ArgumentError(std::string(what) + " grid is empty");
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i] <= 0.0) throw ArgumentError(std::string(what) + " values must be positive");
            if (i > 0 && v[i] <= v[i - 1])
                throw ArgumentError(std::string(what) + " values must be strictly increasing");
        }
    };
    check(spec.c_values, "C");
    check(spec.gamma_values, "gamma");
}

// C in {2^-5, 2^-3, ..., 2^15}, gamma in {1e-5, ..., 1e1}.
inline GridSpec default_grid() {
    GridSpec g;
    for (int e = -5; e <= 15; e += 2) g.c_values.push_back(std::pow(2.0, e));
    for (int e = -5; e <= 1; ++e) g.gamma_values.push_back(std::pow(10.0, e));
    return g;
}

struct GridResult {
    Eigen::MatrixXd scores;  // |C| x |gamma| mean CV accuracies
    GridSpec spec;
    std::string kernel_id;
    std::string dataset_id;
    int folds = 0;
    std::uint64_t seed = 0;

    double best_score() const { return scores.maxCoeff(); }
};

// Cross-validates every (C, gamma) cell. Cluster/covariance structure is
// built once per dataset (transductive) or once per fold (strict) and shared
// across the whole sweep via gamma rescaling, so cells differ only in the
// cheap exponentiation and SVM training. `jobs` > 1 spreads gamma columns
// over threads; scores are written by index, independent of schedule.
inline GridResult grid_search(const Dataset& ds, const KernelSpec& spec, const GridSpec& grid,
                              const FoldPlan& plan,
                              ClusteringMode mode = ClusteringMode::transductive,
                              double tol = 1e-3, int jobs = 1) {
    validate(grid);
    if (jobs < 1) throw ArgumentError("jobs must be >= 1");
    const auto tables = detail::FoldTables::build(ds, spec, plan, mode);

    GridResult result;
    result.spec = grid;
    result.kernel_id = kernel_id(spec);
    result.dataset_id = ds.name;
    result.folds = plan.fold_count;
    result.seed = spec.seed;
    const auto nc = static_cast<Eigen::Index>(grid.c_values.size());
    const auto ng = static_cast<Eigen::Index>(grid.gamma_values.size());
    result.scores.resize(nc, ng);

    auto run_column = [&](Eigen::Index gj) {
        for (Eigen::Index ci = 0; ci < nc; ++ci) {
            const auto report =
                tables.evaluate(grid.gamma_values[static_cast<std::size_t>(gj)],
                                grid.c_values[static_cast<std::size_t>(ci)], tol,
                                plan.fold_count);
            result.scores(ci, gj) = report.mean_accuracy;
        }
    };

    if (jobs == 1) {
        for (Eigen::Index gj = 0; gj < ng; ++gj) run_column(gj);
    } else {
        std::vector<std::thread> pool;
        std::atomic<Eigen::Index> next{0};
        const int workers = std::min<int>(jobs, static_cast<int>(ng));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (Eigen::Index gj = next.fetch_add(1); gj < ng; gj = next.fetch_add(1))
                    run_column(gj);
            });
        for (auto& t : pool) t.join();
    }
    return result;
}

// Tuning-stability curve: for each distinct score alpha in the grid, the
// fraction of cells scoring at least alpha.
struct PfCurve {
    std::vector<double> thresholds;     // sorted ascending, distinct
    std::vector<double> probabilities;  // non-increasing; 1 at the minimum score
};

inline PfCurve pf_curve(const GridResult& r) {
    const auto total = static_cast<double>(r.scores.size());
    if (total == 0.0) throw ArgumentError("empty grid result");
    std::set<double> distinct(r.scores.data(), r.scores.data() + r.scores.size());
    PfCurve curve;
    for (double t : distinct) {
        curve.thresholds.push_back(t);
        curve.probabilities.push_back((r.scores.array() >= t).count() / total);
    }
    return curve;
}

// Areas under the step curves over the shared interval [alpha_min, alpha_max]
// (the smallest minimum and largest maximum threshold across the inputs).
// Between thresholds t_j < alpha <= t_{j+1} the curve value is P(t_{j+1});
// below the first threshold it is 1; above the last it is 0.
inline std::vector<double> pf_auc(const std::vector<PfCurve>& curves) {
    if (curves.empty()) throw ArgumentError("no curves given");
    double alpha_min = std::numeric_limits<double>::infinity();
    double alpha_max = -std::numeric_limits<double>::infinity();
    for (const auto& c : curves) {
        if (c.thresholds.empty()) throw ArgumentError("empty curve");
        alpha_min = std::min(alpha_min, c.thresholds.front());
        alpha_max = std::max(alpha_max, c.thresholds.back());
    }
    std::vector<double> out;
    for (const auto& c : curves) {
        double auc = (c.thresholds.front() - alpha_min) * 1.0;
        for (std::size_t j = 0; j + 1 < c.thresholds.size(); ++j)
            auc += (c.thresholds[j + 1] - c.thresholds[j]) * c.probabilities[j + 1];
        out.push_back(auc);
    }
    return out;
}

// Two-cluster covariance geometry summary: class sizes plus the relative
// Frobenius distances between the cluster covariances, the identity, and the
// full-data covariance.
struct DatasetDiagnostics {
    std::string dataset_id;
    Eigen::Index d = 0;
    Eigen::Index n_neg = 0;
    Eigen::Index n_pos = 0;
    double sigma1_vs_identity = 0.0;  // |S1-I| / (|S1|+|I|)
    double sigma2_vs_identity = 0.0;  // |S2-I| / (|S2|+|I|)
    double sigma2_vs_sigma1 = 0.0;    // |S2-S1| / (|S2|+|S1|)
    double sum_vs_total = 0.0;        // |(S2+S1)-S| / (|S2+S1|+|S|)
};

inline DatasetDiagnostics dataset_diagnostics(const Dataset& ds, std::uint64_t seed) {
    const Clustering cl = kmeans_fit(ds.features, 2, seed);

    auto cluster_rows = [&](int c) {
        std::vector<int> idx;
        for (std::size_t i = 0; i < cl.assignments.size(); ++i)
            if (cl.assignments[i] == c) idx.push_back(static_cast<int>(i));
        Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), ds.dim());
        for (std::size_t r = 0; r < idx.size(); ++r)
            X.row(static_cast<Eigen::Index>(r)) = ds.features.row(idx[r]);
        return X;
    };
    const Eigen::MatrixXd S1 = covariance(cluster_rows(0));
    const Eigen::MatrixXd S2 = covariance(cluster_rows(1));
    const Eigen::MatrixXd S = covariance(ds.features);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(ds.dim(), ds.dim());

    auto ratio = [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
        const double denom = A.norm() + B.norm();
        return denom == 0.0 ? 0.0 : (A - B).norm() / denom;
    };
    DatasetDiagnostics out;
    out.dataset_id = ds.name;
    out.d = ds.dim();
    out.n_neg = ds.n_neg();
    out.n_pos = ds.n_pos();
    out.sigma1_vs_identity = ratio(S1, I);
    out.sigma2_vs_identity = ratio(S2, I);
    out.sigma2_vs_sigma1 = ratio(S2, S1);
    out.sum_vs_total = ratio(S2 + S1, S);
    return out;
}

// Partition baseline: k-means the features, then train an independent
// Mahalanobis-RBF SVM inside each cluster (using that cluster's regularized
// covariance). A test point is scored by the model of its cluster. Clusters
// whose training part is single-class predict that class; empty training
// clusters fall back to the training majority.
inline CvReport mk_rbf_baseline_report(const Dataset& ds, int k, double C, double gamma,
                                       const FoldPlan& plan, double eps = 1e-10,
                                       std::uint64_t seed = 0, double tol = 1e-3) {
    if (k < 2) throw ArgumentError("cluster count must be >= 2");
    if (C <= 0.0) throw ArgumentError("C must be positive");
    if (gamma <= 0.0) throw ArgumentError("gamma must be positive");

    const Clustering cl = kmeans_fit(ds.features, k, seed);
    const Eigen::Index d = ds.dim();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd anchor;
    try {
        anchor = regularize(covariance(ds.features), I, eps);
    } catch (const IllConditionedError&) {
        anchor = I;
    }

    // Per-cluster Mahalanobis precisions from the transductive clustering.
    std::vector<Eigen::MatrixXd> precisions;
    std::vector<std::vector<int>> cluster_members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < cl.assignments.size(); ++i)
        cluster_members[static_cast<std::size_t>(cl.assignments[i])].push_back(
            static_cast<int>(i));
    for (int c = 0; c < k; ++c) {
        const auto& members = cluster_members[static_cast<std::size_t>(c)];
        Eigen::MatrixXd Xc(static_cast<Eigen::Index>(members.size()), d);
        for (std::size_t r = 0; r < members.size(); ++r)
            Xc.row(static_cast<Eigen::Index>(r)) = ds.features.row(members[r]);
        precisions.push_back(inverse_of_regularized(
            members.empty() ? Eigen::MatrixXd::Zero(d, d).eval() : covariance(Xc), anchor, eps));
    }

    CvReport report;
    report.folds = plan.fold_count;
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        const auto& [train, test] = plan.folds[f];

        double train_majority = 0.0;
        for (int i : train) train_majority += ds.labels[i];
        train_majority = train_majority < 0.0 ? -1.0 : 1.0;

        // Per-cluster predictor: +-1 constant or a trained SVM.
        struct ClusterPredictor {
            bool constant = true;
            double constant_label = 1.0;
            SvmModel model;
            std::vector<int> train_rows;
        };
        std::vector<ClusterPredictor> predictors(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c) {
            auto& pred = predictors[static_cast<std::size_t>(c)];
            for (int i : train)
                if (cl.assignments[static_cast<std::size_t>(i)] == c)
                    pred.train_rows.push_back(i);
            if (pred.train_rows.empty()) {
                std::cerr << "warning: cluster " << c << " has no training samples in fold "
                          << f << "; predicting training majority\n";
                pred.constant_label = train_majority;
                continue;
            }
            Eigen::VectorXd y_c(static_cast<Eigen::Index>(pred.train_rows.size()));
            for (std::size_t r = 0; r < pred.train_rows.size(); ++r)
                y_c[static_cast<Eigen::Index>(r)] = ds.labels[pred.train_rows[r]];
            if (!detail::has_both_classes(y_c)) {
                pred.constant_label = y_c[0];
                continue;
            }
            Eigen::MatrixXd Xc(static_cast<Eigen::Index>(pred.train_rows.size()), d);
            for (std::size_t r = 0; r < pred.train_rows.size(); ++r)
                Xc.row(static_cast<Eigen::Index>(r)) = ds.features.row(pred.train_rows[r]);
            MahalanobisRbfKernel kc{gamma, precisions[static_cast<std::size_t>(c)]};
            SvmProblem problem;
            problem.gram = kc.gram(Xc, Xc);
            problem.labels = y_c;
            problem.C = C;
            problem.tol = tol;
            pred.constant = false;
            pred.model = train_svc(problem);
        }

        Eigen::Index correct = 0;
        for (int i : test) {
            const int c = cl.assignments[static_cast<std::size_t>(i)];
            const auto& pred = predictors[static_cast<std::size_t>(c)];
            double label;
            if (pred.constant) {
                label = pred.constant_label;
            } else {
                MahalanobisRbfKernel kc{gamma, precisions[static_cast<std::size_t>(c)]};
                Eigen::VectorXd row(static_cast<Eigen::Index>(pred.train_rows.size()));
                for (std::size_t r = 0; r < pred.train_rows.size(); ++r)
                    row[static_cast<Eigen::Index>(r)] =
                        kc(ds.features.row(i).transpose(),
                           ds.features.row(pred.train_rows[r]).transpose());
                label = decision_function(pred.model, row) < 0.0 ? -1.0 : 1.0;
            }
            if (label == ds.labels[i]) ++correct;
        }
        report.fold_accuracy.push_back(static_cast<double>(correct) /
                                       static_cast<double>(test.size()));
    }
    for (double a : report.fold_accuracy) report.mean_accuracy += a;
    report.mean_accuracy /= static_cast<double>(report.fold_accuracy.size());
    return report;
}

inline double mk_rbf_baseline(const Dataset& ds, int k, double C, double gamma,
                              const FoldPlan& plan, double eps = 1e-10, std::uint64_t seed = 0,
                              double tol = 1e-3) {
    return mk_rbf_baseline_report(ds, k, C, gamma, plan, eps, seed, tol).mean_accuracy;
}

// Fraction of paired protocol cells where A's best score strictly beats B's.
inline double win_percentage(const std::vector<GridResult>& results_a,
                             const std::vector<GridResult>& results_b) {
    if (results_a.empty() || results_a.size() != results_b.size())
        throw ArgumentError("win percentage needs non-empty paired result lists");
    int wins = 0;
    for (std::size_t i = 0; i < results_a.size(); ++i)
        if (results_a[i].best_score() > results_b[i].best_score()) ++wins;
    return static_cast<double>(wins) / static_cast<double>(results_a.size());
}

// The narrow fixed-C protocol: gamma triples {10^i, 10^(i+1), 10^(i+2)} for
// i = 0, -1, ..., -5, each evaluated at C = 1.
inline std::vector<GridSpec> gamma_triple_grids() {
    std::vector<GridSpec> out;
    for (int i = 0; i >= -5; --i) {
        GridSpec g;
        g.c_values = {1.0};
        g.gamma_values = {std::pow(10.0, i), std::pow(10.0, i + 1), std::pow(10.0, i + 2)};
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace ckrbf
