#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <utility>

#include "ckrbf/error.hpp"

namespace ckrbf {

// Parameters of a multivariate normal density N(mean, covariance).
struct GaussianParams {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

// Density of N(mean, cov) at x.
inline double gaussian_pdf(const Eigen::VectorXd& x, const GaussianParams& g) {
    const Eigen::Index d = g.mean.size();
    Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
    if (llt.info() != Eigen::Success)
        throw LinalgError("covariance is not positive definite");
    const Eigen::VectorXd diff = x - g.mean;
    const double quad = diff.dot(llt.solve(diff));
    // det(cov) = prod(diag(L))^2
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double log_norm = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det);
    return std::exp(log_norm - 0.5 * quad);
}

// Closed form of the overlap integral of two normal densities:
//   integral N(m1,S1)[x] N(m2,S2)[x] dx
//     = (2*pi)^(-d/2) det(S1+S2)^(-1/2) exp(-1/2 (m1-m2)' (S1+S2)^-1 (m1-m2))
inline double gaussian_product_integral(const GaussianParams& g1, const GaussianParams& g2) {
    if (g1.mean.size() != g2.mean.size())
        throw ArgumentError("gaussian dimension mismatch");
    const Eigen::Index d = g1.mean.size();
    const Eigen::MatrixXd sum = g1.covariance + g2.covariance;
    Eigen::LLT<Eigen::MatrixXd> llt(sum);
    if (llt.info() != Eigen::Success)
        throw LinalgError("covariance sum is not positive definite");
    const Eigen::VectorXd diff = g1.mean - g2.mean;
    const double quad = diff.dot(llt.solve(diff));
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double log_val =
        -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det + quad);
    return std::exp(log_val);
}

// Both sides of the quadratic-form merge identity behind the product
// integral. With precision matrices P1, P2:
//   lhs = (x-m1)' P1 (x-m1) + (x-m2)' P2 (x-m2)
//   rhs = (x-m)' S (x-m) + (m1-m2)' W (m1-m2),
// where S = P1+P2, m = S^-1 (P1 m1 + P2 m2), W = (P1^-1 + P2^-1)^-1.
// Test utility: the two values must agree for SPD P1, P2.
inline std::pair<double, double> quadratic_merge_check(const Eigen::VectorXd& m1,
                                              const Eigen::VectorXd& m2,
                                              const Eigen::MatrixXd& P1,
                                              const Eigen::MatrixXd& P2,
                                              const Eigen::VectorXd& x) {
    const double lhs = (x - m1).dot(P1 * (x - m1)) + (x - m2).dot(P2 * (x - m2));

    const Eigen::MatrixXd S = P1 + P2;
    Eigen::LLT<Eigen::MatrixXd> llt_s(S);
    if (llt_s.info() != Eigen::Success)
        throw LinalgError("precision sum is not positive definite");
    const Eigen::VectorXd m = llt_s.solve(P1 * m1 + P2 * m2);

    Eigen::LLT<Eigen::MatrixXd> llt1(P1), llt2(P2);
    if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success)
        throw LinalgError("precision matrix is not positive definite");
    const Eigen::Index d = m1.size();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd W_inv = llt1.solve(I) + llt2.solve(I);
    Eigen::LLT<Eigen::MatrixXd> llt_w(W_inv);
    if (llt_w.info() != Eigen::Success)
        throw LinalgError("covariance sum is not positive definite");

    const double rhs = (x - m).dot(S * (x - m)) + (m1 - m2).dot(llt_w.solve(m1 - m2));
    return {lhs, rhs};
}

}  // namespace ckrbf
