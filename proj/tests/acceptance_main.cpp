// Acceptance gate: one pass/fail line per release criterion, exit status
// equal to the number of failures. Data-dependent criteria fail honestly
// with a "dataset file not found" note when the benchmark files are absent.
#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <ckrbf/ckrbf.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double runif(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * ckrbf::uniform_real(rng);
}

MatrixXd random_points(int n, int d, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
    MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = runif(rng, lo, hi);
    return X;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// --- Criterion 1: closed-form Gaussian product integral vs quadrature. ----
Outcome check_product_integral() {
    std::mt19937_64 rng(101);
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(trial % 2);
        ckrbf::GaussianParams g1, g2;
        g1.mean = random_points(1, d, rng, -1.0, 1.0).row(0).transpose();
        g2.mean = random_points(1, d, rng, -1.0, 1.0).row(0).transpose();
        g1.covariance = oracle::random_spd(d, 0.1, 3.0, rng);
        g2.covariance = oracle::random_spd(d, 0.1, 3.0, rng);
        const double got = ckrbf::gaussian_product_integral(g1, g2);
        const double want = oracle::gaussian_overlap_quadrature(g1.mean, g1.covariance, g2.mean,
                                                                g2.covariance, 1e-8);
        worst = std::max(worst, std::abs(got - want) / std::abs(want));
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream detail;
    detail << "100 instances, max relative error " << worst << ", " << seconds << "s";
    return {worst <= 1e-6 && seconds < 30.0, detail.str()};
}

// --- Criterion 2: two-Gaussian exponent identity. --------------------------
Outcome check_quadratic_merge_identity() {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 1 + static_cast<int>(ckrbf::uniform_index(rng, 5));
        const VectorXd m1 = random_points(1, d, rng).row(0).transpose();
        const VectorXd m2 = random_points(1, d, rng).row(0).transpose();
        const VectorXd x = random_points(1, d, rng).row(0).transpose();
        const MatrixXd p1 = oracle::random_spd(d, 0.2, 3.0, rng).inverse();
        const MatrixXd p2 = oracle::random_spd(d, 0.2, 3.0, rng).inverse();
        const auto [lhs, rhs] = ckrbf::quadratic_merge_check(m1, m2, p1, p2, x);
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
    std::ostringstream detail;
    detail << "1000 instances, max relative mismatch " << worst;
    return {worst <= 1e-9, detail.str()};
}

// --- Criterion 3: positive semidefinite Gram matrices. ----------------------
Outcome check_mercer() {
    std::mt19937_64 rng(303);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + static_cast<int>(ckrbf::uniform_index(rng, 10));
        const int k = 2 + static_cast<int>(trial % 3);
        const MatrixXd X = random_points(200, d, rng);
        const auto model = ckrbf::build_kernel(X, k, 1.0, 1e-10, 303 + trial);
        const MatrixXd G = ckrbf::gram(model, X, X);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(G, Eigen::EigenvaluesOnly);
        const double ratio = eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff();
        worst = std::min(worst, ratio);
    }
    std::ostringstream detail;
    detail << "20 datasets (n=200), min eigenvalue ratio " << worst;
    return {worst >= -1e-8, detail.str()};
}

// --- Criterion 4: identity-covariance and single-cluster reductions. --------
Outcome check_reductions() {
    std::mt19937_64 rng(404);
    double worst_identity = 0.0;
    for (int d = 1; d <= 3; ++d) {
        ckrbf::Clustering cl;
        cl.k = 2;
        cl.centroids = MatrixXd::Zero(2, d);
        cl.centroids.row(1).setConstant(3.0);
        cl.assignments = {0, 1};
        const auto model = ckrbf::make_kernel_model(
            cl, {MatrixXd::Identity(d, d), MatrixXd::Identity(d, d)}, 0.8, 1e-10,
            MatrixXd::Identity(d, d));
        const auto rbf_half = ckrbf::rbf_kernel(0.4);
        const double scale = std::pow(2.0, -0.5 * d);
        for (int t = 0; t < 200; ++t) {
            const VectorXd x = random_points(1, d, rng).row(0).transpose();
            const VectorXd y = random_points(1, d, rng).row(0).transpose();
            const double got = ckrbf::eval_kernel(model, x, y);
            const double want = scale * rbf_half(x, y);
            worst_identity = std::max(worst_identity, std::abs(got - want) / want);
        }
    }

    double worst_ratio = 0.0;
    {
        const int d = 3;
        const MatrixXd X = random_points(60, d, rng);
        const double gamma = 0.9;
        const auto model = ckrbf::build_kernel(X, 1, gamma, 1e-10, 404);
        const auto mrbf = ckrbf::mahalanobis_rbf_kernel(X, gamma / 2.0, 1e-10);
        double first = 0.0;
        for (int t = 0; t < 1000; ++t) {
            const VectorXd x = random_points(1, d, rng).row(0).transpose();
            const VectorXd y = random_points(1, d, rng).row(0).transpose();
            const double ratio = ckrbf::eval_kernel(model, x, y) / mrbf(x, y);
            if (t == 0)
                first = ratio;
            else
                worst_ratio = std::max(worst_ratio, std::abs(ratio - first) / std::abs(first));
        }
    }
    std::ostringstream detail;
    detail << "identity reduction max rel " << worst_identity << ", single-cluster ratio drift "
           << worst_ratio;
    return {worst_identity <= 1e-12 && worst_ratio <= 1e-10, detail.str()};
}

// --- Criterion 5: gamma rescaling equals a per-gamma rebuild. ----------------
Outcome check_rescaling() {
    std::mt19937_64 rng(505);
    const MatrixXd X = random_points(50, 3, rng);
    const auto base = ckrbf::build_kernel(X, 3, 1.0, 1e-10, 505);
    double worst = 0.0;
    for (int e = -3; e <= 3; ++e) {
        const double gamma = std::pow(10.0, e);
        const MatrixXd fast = ckrbf::gram(ckrbf::rescale_gamma(base, gamma), X, X);
        const MatrixXd slow = ckrbf::gram(ckrbf::build_kernel(X, 3, gamma, 1e-10, 505), X, X);
        for (Eigen::Index i = 0; i < fast.size(); ++i)
            worst = std::max(worst,
                             std::abs(fast(i) - slow(i)) / std::max(1.0, std::abs(slow(i))));
    }
    std::ostringstream detail;
    detail << "7 gamma values, max Gram deviation " << worst;
    return {worst <= 1e-12, detail.str()};
}

// --- Criterion 6: solver vs projected-gradient QP oracle. --------------------
Outcome check_solver() {
    std::mt19937_64 rng(606);
    double worst_obj = 0.0;
    double worst_kkt = 0.0;
    const double tol = 1e-8;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(ckrbf::uniform_index(rng, 11));
        const int d = 1 + static_cast<int>(ckrbf::uniform_index(rng, 3));
        const MatrixXd X = random_points(n, d, rng);
        VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = ckrbf::uniform_real(rng) < 0.5 ? -1.0 : 1.0;
        y[0] = -1.0;
        y[n - 1] = 1.0;
        const double gamma = runif(rng, 0.3, 1.5);
        const double C = std::vector<double>{0.1, 1.0, 10.0}[ckrbf::uniform_index(rng, 3)];

        ckrbf::SvmProblem problem;
        problem.gram = ckrbf::rbf_kernel(gamma).gram(X, X);
        problem.labels = y;
        problem.C = C;
        problem.tol = tol;
        const auto model = ckrbf::train_svc(problem);
        const auto reference = oracle::qp_oracle(problem.gram, y, C);
        worst_obj = std::max(worst_obj, std::abs(model.objective - reference.objective) /
                                            (1.0 + std::abs(model.objective)));

        for (Eigen::Index t = 0; t < y.size(); ++t) {
            const double f = ckrbf::decision_function(model, problem.gram.row(t));
            const double margin = y[t] * f;
            const double alpha = model.dual_coef[t] * y[t];
            double residual = 0.0;
            if (alpha <= 0.0)
                residual = std::max(0.0, 1.0 - margin);
            else if (alpha >= C)
                residual = std::max(0.0, margin - 1.0);
            else
                residual = std::abs(margin - 1.0);
            worst_kkt = std::max(worst_kkt, residual);
        }
    }
    std::ostringstream detail;
    detail << "50 problems, max objective gap " << worst_obj << ", max KKT residual "
           << worst_kkt << " (tol " << tol << ")";
    return {worst_obj <= 1e-6 && worst_kkt <= tol * (1.0 + 1e-6), detail.str()};
}

// --- Benchmark-data helpers for criteria 7-9. -------------------------------
std::optional<ckrbf::Dataset> load_scaled(const std::string& name, std::string& missing) {
    if (!testutil::data_available(name)) {
        if (!missing.empty()) missing += ", ";
        missing += testutil::data_path(name).string();
        return std::nullopt;
    }
    return ckrbf::scale_unit_interval(ckrbf::load_dataset(testutil::data_path(name)));
}

double best_grid_accuracy(const ckrbf::Dataset& ds, ckrbf::KernelFamily family, int k,
                          const ckrbf::GridSpec& grid) {
    ckrbf::KernelSpec spec;
    spec.family = family;
    spec.k = k;
    spec.seed = 0;
    const auto plan = ckrbf::stratified_kfold(ds, 10, 0);
    return ckrbf::grid_search(ds, spec, grid, plan).best_score();
}

// --- Criterion 7: headline grid-search accuracies. ---------------------------
Outcome check_reproduction() {
    std::string missing;
    std::ostringstream detail;
    bool ok = true;

    if (auto fourclass = load_scaled("fourclass", missing)) {
        const auto grid = ckrbf::default_grid();
        const double rbf = best_grid_accuracy(*fourclass, ckrbf::KernelFamily::rbf, 2, grid);
        const double mrbf = best_grid_accuracy(*fourclass, ckrbf::KernelFamily::mrbf, 2, grid);
        const double ck = best_grid_accuracy(*fourclass, ckrbf::KernelFamily::ckrbf, 2, grid);
        detail << "fourclass rbf=" << rbf << " mrbf=" << mrbf << " ckrbf(2)=" << ck << "; ";
        ok = ok && rbf >= 0.99 && mrbf >= 0.99 && ck >= 0.99;
    } else {
        ok = false;
    }
    if (auto bank = load_scaled("bank", missing)) {
        const double ck = best_grid_accuracy(*bank, ckrbf::KernelFamily::ckrbf, 2,
                                             ckrbf::default_grid());
        detail << "bank ckrbf(2)=" << ck << "; ";
        ok = ok && ck >= 0.9995;
    } else {
        ok = false;
    }
    if (auto breast = load_scaled("breast-cancer", missing)) {
        const double ck = best_grid_accuracy(*breast, ckrbf::KernelFamily::ckrbf, 2,
                                             ckrbf::default_grid());
        detail << "breast-cancer ckrbf(2)=" << ck << "; ";
        ok = ok && std::abs(ck - 0.975) <= 0.015;
    } else {
        ok = false;
    }
    if (!missing.empty()) detail << "dataset file not found: " << missing;
    return {ok, detail.str()};
}

// --- Criterion 8: fixed-cost ordering across the benchmark datasets. ---------
Outcome check_fixed_cost_ordering() {
    const std::vector<std::string> names = {"australian", "bank",  "breast-cancer",
                                            "crashes",    "diabetes", "fourclass",
                                            "heart",      "liver-disorders", "splice"};
    ckrbf::GridSpec grid;
    grid.c_values = {1.0};
    grid.gamma_values = ckrbf::default_grid().gamma_values;

    std::string missing;
    int wins = 0;
    int available = 0;
    std::ostringstream detail;
    for (const auto& name : names) {
        const auto ds = load_scaled(name, missing);
        if (!ds) continue;
        ++available;
        const double ck = best_grid_accuracy(*ds, ckrbf::KernelFamily::ckrbf, 2, grid);
        const double mrbf = best_grid_accuracy(*ds, ckrbf::KernelFamily::mrbf, 2, grid);
        detail << name << " ckrbf=" << ck << " mrbf=" << mrbf << "; ";
        if (ck >= mrbf) ++wins;
    }
    detail << "ckrbf(2) >= mrbf on " << wins << " of " << available << " datasets";
    if (!missing.empty()) detail << "; dataset file not found: " << missing;
    return {wins >= 6, detail.str()};
}

// --- Criterion 9: stability-area ordering on the smaller datasets. -----------
Outcome check_stability_ordering() {
    const std::vector<std::string> names = {"diabetes", "heart", "liver-disorders"};
    std::string missing;
    int wins = 0;
    std::ostringstream detail;
    for (const auto& name : names) {
        const auto ds = load_scaled(name, missing);
        if (!ds) continue;
        const auto plan = ckrbf::stratified_kfold(*ds, 10, 0);
        const auto grid = ckrbf::default_grid();
        ckrbf::KernelSpec ck_spec;
        ck_spec.family = ckrbf::KernelFamily::ckrbf;
        ck_spec.k = 2;
        ckrbf::KernelSpec rbf_spec;
        rbf_spec.family = ckrbf::KernelFamily::rbf;
        const auto ck_curve = ckrbf::pf_curve(ckrbf::grid_search(*ds, ck_spec, grid, plan));
        const auto rbf_curve = ckrbf::pf_curve(ckrbf::grid_search(*ds, rbf_spec, grid, plan));
        const auto aucs = ckrbf::pf_auc({ck_curve, rbf_curve});
        detail << name << " ckrbf=" << aucs[0] << " rbf=" << aucs[1] << "; ";
        if (aucs[0] > aucs[1]) ++wins;
    }
    detail << wins << " of 3 orderings hold";
    if (!missing.empty()) detail << "; dataset file not found: " << missing;
    return {wins >= 3, detail.str()};
}

// --- Criterion 10: toy-scale clustering optimality. ---------------------------
Outcome check_clustering_optimality() {
    std::mt19937_64 rng(1010);
    int optimal = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(ckrbf::uniform_index(rng, 7));
        const int d = 1 + static_cast<int>(ckrbf::uniform_index(rng, 3));
        const MatrixXd X = random_points(n, d, rng);
        const auto fit = ckrbf::kmeans_fit(X, 2, 1010 + trial, 20);
        const double best = oracle::best_bipartition_inertia(X);
        if (fit.inertia <= best + 1e-9 * (1.0 + best)) ++optimal;
    }
    std::ostringstream detail;
    detail << optimal << " of 100 instances at brute-force-optimal inertia";
    return {optimal >= 95, detail.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"gaussian product integral matches adaptive quadrature", check_product_integral},
        {"two-gaussian exponent identity holds", check_quadratic_merge_identity},
        {"cluster kernel Gram matrices are positive semidefinite", check_mercer},
        {"identity-covariance and single-cluster reductions hold", check_reductions},
        {"gamma rescaling equals per-gamma rebuilds", check_rescaling},
        {"solver matches the QP oracle with KKT-feasible models", check_solver},
        {"benchmark grid accuracies reach the published levels", check_reproduction},
        {"fixed-cost protocol favours the cluster kernel", check_fixed_cost_ordering},
        {"stability areas favour the cluster kernel", check_stability_ordering},
        {"toy-scale clustering attains optimal inertia", check_clustering_optimality},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome outcome;
        std::string detail;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        if (!outcome.pass) ++failures;
        std::printf("%s criterion %zu: %s (%s)\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), outcome.detail.c_str());
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
