// Tests for the dual SVM solver: closed-form two-point cases, brute-force QP
// agreement on small problems, KKT residuals, objective monotonicity, and the
// constraint bookkeeping of the pairwise updates.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <ckrbf/kernel.hpp>
#include <ckrbf/rng.hpp>
#include <ckrbf/svm.hpp>

#include "oracles.hpp"
#include "test_util.hpp"

using Catch::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double runif(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ckrbf::uniform_real(rng);
}

struct RandomProblem {
  MatrixXd gram;
  VectorXd labels;
  double C = 1.0;
};

// Small RBF-gram problem with both classes present; the strictly positive
// definite gram keeps the dual solution unique.
RandomProblem random_problem(std::mt19937_64& rng, int max_n = 12) {
  const int n = 2 + static_cast<int>(ckrbf::uniform_index(rng, static_cast<std::size_t>(max_n - 1)));
  const int d = 1 + static_cast<int>(ckrbf::uniform_index(rng, 3));
  MatrixXd X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = runif(rng, -2.0, 2.0);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = ckrbf::uniform_index(rng, 2) == 0 ? -1.0 : 1.0;
  y[0] = -1.0;
  y[n - 1] = 1.0;
  const double gamma = runif(rng, 0.3, 1.5);
  const double C_choices[] = {0.1, 1.0, 10.0};
  RandomProblem p;
  p.gram = ckrbf::rbf_kernel(gamma).gram(X, X);
  p.labels = y;
  p.C = C_choices[ckrbf::uniform_index(rng, 3)];
  return p;
}

// Largest violation of the KKT conditions given the trained model: free
// points must sit on the margin, zero points outside, bound points inside.
double max_kkt_residual(const ckrbf::SvmModel& m, const MatrixXd& gram, const VectorXd& y,
                        double C) {
  double worst = 0.0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const double f = ckrbf::decision_function(m, gram.row(t).transpose());
    const double margin = y[t] * f;
    const double alpha = m.dual_coef[t] * y[t];
    if (alpha <= 0.0)
      worst = std::max(worst, 1.0 - margin);  // must be >= 1 - tol
    else if (alpha >= C)
      worst = std::max(worst, margin - 1.0);  // must be <= 1 + tol
    else
      worst = std::max(worst, std::abs(margin - 1.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("symmetric two-point problem splits the weight evenly") {
  MatrixXd X(2, 1);
  X << -1.0, 1.0;
  VectorXd y(2);
  y << -1.0, 1.0;
  ckrbf::SvmProblem p;
  p.gram = ckrbf::rbf_kernel(0.01).gram(X, X);
  p.labels = y;
  p.C = 1000.0;
  p.tol = 1e-8;
  const auto m = ckrbf::train_svc(p);
  const double a0 = -m.dual_coef[0];
  const double a1 = m.dual_coef[1];
  REQUIRE(a0 > 0.0);
  REQUIRE(a0 == Approx(a1).epsilon(1e-12));
  REQUIRE(std::abs(m.bias) <= 1e-8);
  REQUIRE(m.support_indices == std::vector<int>{0, 1});
  REQUIRE(m.dual_coef.sum() == Approx(0.0).margin(1e-12));
}

TEST_CASE("four separable points match the brute-force solution") {
  MatrixXd X(4, 1);
  X << -2.0, -1.0, 1.0, 2.0;
  VectorXd y(4);
  y << -1.0, -1.0, 1.0, 1.0;
  ckrbf::SvmProblem p;
  p.gram = ckrbf::rbf_kernel(1.0).gram(X, X);
  p.labels = y;
  p.C = 10.0;
  p.tol = 1e-8;
  const auto m = ckrbf::train_svc(p);
  const auto ref = oracle::qp_oracle(p.gram, y, p.C);
  REQUIRE(std::abs(m.objective - ref.objective) <= 1e-6 * (1.0 + std::abs(ref.objective)));
}

TEST_CASE("conflicting duplicate points saturate the box") {
  MatrixXd gram(2, 2);
  gram << 1.0, 1.0, 1.0, 1.0;
  VectorXd y(2);
  y << -1.0, 1.0;
  ckrbf::SvmProblem p;
  p.gram = gram;
  p.labels = y;
  p.C = 0.1;
  const auto m = ckrbf::train_svc(p);
  REQUIRE(m.dual_coef[0] == -0.1);
  REQUIRE(m.dual_coef[1] == 0.1);
  REQUIRE(m.support_indices == std::vector<int>{0, 1});
}

TEST_CASE("random small problems agree with the QP oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rp = random_problem(rng);
    ckrbf::SvmProblem p;
    p.gram = rp.gram;
    p.labels = rp.labels;
    p.C = rp.C;
    p.tol = 1e-8;
    const auto m = ckrbf::train_svc(p);
    const auto ref = oracle::qp_oracle(rp.gram, rp.labels, rp.C);
    INFO("trial " << trial << " n=" << rp.labels.size() << " C=" << rp.C);
    REQUIRE(std::abs(m.objective - ref.objective) <=
            1e-6 * (1.0 + std::abs(ref.objective)));
    // Every KKT residual of the returned model is within the solver tolerance.
    REQUIRE(max_kkt_residual(m, rp.gram, rp.labels, rp.C) <= p.tol * (1.0 + 1e-6) + 1e-12);
    // Box constraints hold exactly.
    for (Eigen::Index t = 0; t < rp.labels.size(); ++t) {
      const double alpha = m.dual_coef[t] * rp.labels[t];
      REQUIRE(alpha >= 0.0);
      REQUIRE(alpha <= rp.C);
    }
    // The equality constraint survives the pairwise updates to rounding.
    REQUIRE(std::abs(m.dual_coef.sum()) <= 1e-9 * (1.0 + rp.C));
    // Support indices are exactly the positive coefficients.
    std::vector<int> want;
    for (Eigen::Index t = 0; t < rp.labels.size(); ++t)
      if (m.dual_coef[t] * rp.labels[t] > 0.0) want.push_back(static_cast<int>(t));
    REQUIRE(m.support_indices == want);
  }
}

TEST_CASE("decision values match the oracle model on small problems") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rp = random_problem(rng, 10);
    ckrbf::SvmProblem p;
    p.gram = rp.gram;
    p.labels = rp.labels;
    p.C = rp.C;
    p.tol = 1e-9;
    const auto m = ckrbf::train_svc(p);

    const auto ref = oracle::qp_oracle(rp.gram, rp.labels, rp.C);
    // Oracle bias: average stationarity target over its free support vectors.
    double b = 0.0;
    int nb = 0;
    for (Eigen::Index t = 0; t < rp.labels.size(); ++t) {
      if (ref.alpha[t] > 1e-7 * rp.C && ref.alpha[t] < rp.C * (1.0 - 1e-7)) {
        double f = 0.0;
        for (Eigen::Index s = 0; s < rp.labels.size(); ++s)
          f += ref.alpha[s] * rp.labels[s] * rp.gram(t, s);
        b += rp.labels[t] - f;
        ++nb;
      }
    }
    if (nb == 0) continue;  // decision function not pinned by free vectors
    b /= nb;
    for (Eigen::Index t = 0; t < rp.labels.size(); ++t) {
      double f_ref = b;
      for (Eigen::Index s = 0; s < rp.labels.size(); ++s)
        f_ref += ref.alpha[s] * rp.labels[s] * rp.gram(t, s);
      const double f_got = ckrbf::decision_function(m, rp.gram.row(t).transpose());
      REQUIRE(std::abs(f_got - f_ref) <= 1e-5 * (1.0 + std::abs(f_ref)));
    }
  }
}

TEST_CASE("dual objective never decreases across updates") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rp = random_problem(rng);
    ckrbf::SvmProblem p;
    p.gram = rp.gram;
    p.labels = rp.labels;
    p.C = rp.C;
    p.tol = 1e-7;
    std::vector<double> trace;
    const auto m = ckrbf::train_svc(p, &trace);
    REQUIRE(!trace.empty());
    double prev = 0.0;  // objective at alpha = 0
    for (const double v : trace) {
      REQUIRE(v >= prev - 1e-12 * (1.0 + std::abs(prev)));
      prev = v;
    }
    REQUIRE(m.objective == Approx(trace.back()).margin(1e-12));
  }
}

TEST_CASE("decision function with zero coefficients returns the bias") {
  ckrbf::SvmModel m;
  m.dual_coef = VectorXd::Zero(3);
  m.bias = 0.75;
  VectorXd row = VectorXd::Ones(3);
  REQUIRE(ckrbf::decision_function(m, row) == 0.75);
  VectorXd bad = VectorXd::Ones(4);
  REQUIRE_THROWS_AS(ckrbf::decision_function(m, bad), ckrbf::ArgumentError);
}

TEST_CASE("free support vectors sit on their margin") {
  const auto ds = testutil::make_blobs(12, 2, 3.0, 0.8, 5);
  ckrbf::SvmProblem p;
  p.gram = ckrbf::rbf_kernel(0.5).gram(ds.features, ds.features);
  p.labels = ds.labels;
  p.C = 1.0;
  p.tol = 1e-6;
  const auto m = ckrbf::train_svc(p);
  int checked = 0;
  for (const int i : m.support_indices) {
    const double alpha = m.dual_coef[i] * ds.labels[i];
    if (alpha < p.C * (1.0 - 1e-9)) {
      const double f = ckrbf::decision_function(m, p.gram.row(i).transpose());
      REQUIRE(ds.labels[i] * f == Approx(1.0).margin(p.tol * (1.0 + 1e-6)));
      ++checked;
    }
  }
  REQUIRE(checked > 0);
}

TEST_CASE("prediction is the sign of the decision value with ties positive") {
  ckrbf::SvmModel m;
  m.dual_coef = VectorXd::Zero(2);
  m.bias = 0.0;
  MatrixXd rows = MatrixXd::Ones(1, 2);
  REQUIRE(ckrbf::predict(m, rows)[0] == 1.0);  // decision exactly 0

  const auto ds = testutil::random_dataset(15, 2, 8);
  ckrbf::SvmProblem p;
  p.gram = ckrbf::rbf_kernel(1.0).gram(ds.features, ds.features);
  p.labels = ds.labels;
  const auto trained = ckrbf::train_svc(p);
  const VectorXd preds = ckrbf::predict(trained, p.gram);
  for (Eigen::Index t = 0; t < preds.size(); ++t) {
    const double f = ckrbf::decision_function(trained, p.gram.row(t).transpose());
    REQUIRE(preds[t] == (f < 0.0 ? -1.0 : 1.0));
  }
}

TEST_CASE("a separable training set is classified perfectly at large C") {
  const auto ds = testutil::make_blobs(15, 2, 6.0, 0.5, 77);
  ckrbf::SvmProblem p;
  p.gram = ckrbf::rbf_kernel(1.0).gram(ds.features, ds.features);
  p.labels = ds.labels;
  p.C = 100.0;
  const auto m = ckrbf::train_svc(p);
  const VectorXd preds = ckrbf::predict(m, p.gram);
  REQUIRE((preds.array() == ds.labels.array()).all());
}

TEST_CASE("solver works on kernels without a unit diagonal") {
  // Cluster kernel gram: diagonal entries are det(2 Sigma)^(-1/2), not 1.
  const auto ds = testutil::make_blobs(10, 2, 4.0, 0.6, 13);
  const auto model = ckrbf::build_kernel(ds.features, 2, 1.0, 1e-10, 2);
  ckrbf::SvmProblem p;
  p.gram = ckrbf::gram(model, ds.features, ds.features);
  p.labels = ds.labels;
  p.C = 10.0;
  p.tol = 1e-6;
  const auto m = ckrbf::train_svc(p);
  const auto ref = oracle::qp_oracle(p.gram, ds.labels, p.C);
  REQUIRE(std::abs(m.objective - ref.objective) <= 1e-6 * (1.0 + std::abs(ref.objective)));
  const VectorXd preds = ckrbf::predict(m, p.gram);
  REQUIRE((preds.array() == ds.labels.array()).all());
}

TEST_CASE("solver validates its inputs") {
  MatrixXd gram(2, 2);
  gram << 1.0, 0.5, 0.5, 1.0;
  VectorXd y(2);
  y << -1.0, 1.0;
  ckrbf::SvmProblem p;
  p.gram = gram;
  p.labels = y;

  ckrbf::SvmProblem bad = p;
  bad.gram(0, 1) = 0.7;  // asymmetric
  REQUIRE_THROWS_AS(ckrbf::train_svc(bad), ckrbf::ArgumentError);

  bad = p;
  bad.C = 0.0;
  REQUIRE_THROWS_AS(ckrbf::train_svc(bad), ckrbf::ArgumentError);

  bad = p;
  bad.tol = 0.0;
  REQUIRE_THROWS_AS(ckrbf::train_svc(bad), ckrbf::ArgumentError);

  bad = p;
  bad.labels[0] = 2.0;
  REQUIRE_THROWS_AS(ckrbf::train_svc(bad), ckrbf::ArgumentError);

  bad = p;
  bad.labels = VectorXd::Ones(3);
  REQUIRE_THROWS_AS(ckrbf::train_svc(bad), ckrbf::ArgumentError);

  bad = p;
  bad.gram = MatrixXd::Ones(0, 0);
  bad.labels = VectorXd(0);
  REQUIRE_THROWS_AS(ckrbf::train_svc(bad), ckrbf::ArgumentError);
}

TEST_CASE("hitting the update cap raises an error carrying the best iterate") {
  const auto ds = testutil::make_blobs(10, 2, 2.0, 1.0, 3);
  ckrbf::SvmProblem p;
  p.gram = ckrbf::rbf_kernel(1.0).gram(ds.features, ds.features);
  p.labels = ds.labels;
  p.C = 10.0;
  p.tol = 1e-10;
  p.max_updates = 2;
  try {
    ckrbf::train_svc(p);
    FAIL("expected a convergence error");
  } catch (const ckrbf::ConvergenceError& e) {
    REQUIRE(e.best_model.dual_coef.size() == ds.labels.size());
    REQUIRE(e.best_model.objective >= 0.0);
    for (Eigen::Index t = 0; t < ds.labels.size(); ++t) {
      const double alpha = e.best_model.dual_coef[t] * ds.labels[t];
      REQUIRE(alpha >= 0.0);
      REQUIRE(alpha <= p.C);
    }
  }
}
