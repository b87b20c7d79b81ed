#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "ckrbf/clustering.hpp"
#include "ckrbf/error.hpp"
#include "ckrbf/gaussian.hpp"

namespace ckrbf {

// Maximum-likelihood empirical covariance (centered, divided by the sample
// count). A single sample yields the zero matrix. Exactly symmetric: only the
// lower triangle is accumulated and then mirrored.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& X) {
    if (X.rows() < 1) throw ArgumentError("covariance of an empty sample");
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.adjoint(),
                                                   1.0 / static_cast<double>(X.rows()));
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    return cov;
}

// Positive-definiteness test used throughout: Cholesky must succeed and the
// smallest eigenvalue must clear a trace-relative floor.
inline bool is_positive_definite(const Eigen::MatrixXd& S) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > 1e-12 * S.trace();
}

// Shrinks S toward the positive-definite anchor A until the result passes the
// PD test: returns S itself when already PD, otherwise (1-e)S + eA with e
// escalating tenfold from eps. Gives up past e = 1e-2.
inline Eigen::MatrixXd regularize(const Eigen::MatrixXd& S, const Eigen::MatrixXd& A,
                                  double eps) {
    if (eps <= 0.0 || eps >= 1.0) throw ArgumentError("shrinkage eps must lie in (0,1)");
    if (S.rows() != A.rows() || S.cols() != A.cols())
        throw ArgumentError("regularizer shape mismatch");
    if (is_positive_definite(S)) return S;
    for (double e = eps; e <= 1e-2 * (1.0 + 1e-9); e *= 10.0) {
        Eigen::MatrixXd R = (1.0 - e) * S + e * A;
        if (is_positive_definite(R)) return R;
    }
    throw IllConditionedError("covariance not positive definite even at shrinkage 1e-2");
}

// Precomputed per-pair quantities shared by every gamma value: the cluster
// covariances and, for each cluster pair (i,j), the normalizing factor
// n_ij = det(S_i+S_j)^(-1/2) and the inverse sum (S_i+S_j)^(-1). Symmetric
// slots hold identical copies so evaluation is exactly symmetric.
struct KernelBasis {
    Clustering clustering;
    std::vector<Eigen::MatrixXd> sigmas;    // k regularized d x d covariances
    Eigen::MatrixXd norm_factors;           // k x k
    std::vector<Eigen::MatrixXd> inv_sums;  // k*k, row-major
    double epsilon = 1e-10;
    Eigen::MatrixXd regularizer;            // shrinkage anchor A

    int k() const { return clustering.k; }
    Eigen::Index dim() const { return clustering.centroids.cols(); }
    const Eigen::MatrixXd& inv_sum(int i, int j) const {
        return inv_sums[static_cast<std::size_t>(i) * static_cast<std::size_t>(k()) +
                        static_cast<std::size_t>(j)];
    }
};

// A kernel is a basis plus the bandwidth gamma. Rescaling gamma shares the
// basis, so determinant/inverse work is never repeated across a gamma sweep.
struct KernelModel {
    std::shared_ptr<const KernelBasis> basis;
    double gamma = 1.0;

    const Clustering& clustering() const { return basis->clustering; }
    const std::vector<Eigen::MatrixXd>& sigmas() const { return basis->sigmas; }
    const Eigen::MatrixXd& norm_factors() const { return basis->norm_factors; }
    const Eigen::MatrixXd& inv_sum(int i, int j) const { return basis->inv_sum(i, j); }
    double epsilon() const { return basis->epsilon; }
    const Eigen::MatrixXd& regularizer() const { return basis->regularizer; }
    int k() const { return basis->k(); }
    Eigen::Index dim() const { return basis->dim(); }
};

namespace detail {

inline double quad_form(const Eigen::MatrixXd& S, const Eigen::VectorXd& diff) {
    return diff.dot(S * diff);
}

}  // namespace detail

// Assembles the pairwise tables for given cluster covariances. Upper/lower
// slots are copies of the same computed values, making the tables symmetric
// to the bit.
inline KernelModel make_kernel_model(Clustering clustering,
                                     std::vector<Eigen::MatrixXd> sigmas, double gamma,
                                     double eps, Eigen::MatrixXd regularizer) {
    if (gamma <= 0.0) throw ArgumentError("gamma must be positive");
    const int k = clustering.k;
    if (static_cast<int>(sigmas.size()) != k)
        throw ArgumentError("need one covariance per cluster");
    const Eigen::Index d = clustering.centroids.cols();
    for (const auto& s : sigmas) {
        if (s.rows() != d || s.cols() != d)
            throw ArgumentError("covariance shape mismatch");
        if ((s - s.transpose()).cwiseAbs().maxCoeff() >
            1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()))
            throw LinalgError("cluster covariance is not symmetric");
    }

    auto basis = std::make_shared<KernelBasis>();
    basis->clustering = std::move(clustering);
    basis->sigmas = std::move(sigmas);
    basis->epsilon = eps;
    basis->regularizer = std::move(regularizer);
    basis->norm_factors.resize(k, k);
    basis->inv_sums.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k),
                           Eigen::MatrixXd());
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            const Eigen::MatrixXd sum = basis->sigmas[static_cast<std::size_t>(i)] +
                                        basis->sigmas[static_cast<std::size_t>(j)];
            Eigen::LLT<Eigen::MatrixXd> llt(sum);
            if (llt.info() != Eigen::Success)
                throw LinalgError("covariance sum is not positive definite");
            const double log_det =
                llt.matrixLLT().diagonal().array().log().sum();  // = 1/2 log det(sum)
            const double n_ij = std::exp(-log_det);
            Eigen::MatrixXd inv = llt.solve(I);
            inv = ((inv + inv.transpose()) / 2.0).eval();
            basis->norm_factors(i, j) = n_ij;
            basis->norm_factors(j, i) = n_ij;
            const auto sk = static_cast<std::size_t>(k);
            basis->inv_sums[static_cast<std::size_t>(i) * sk + static_cast<std::size_t>(j)] = inv;
            basis->inv_sums[static_cast<std::size_t>(j) * sk + static_cast<std::size_t>(i)] =
                std::move(inv);
        }
    }
    return KernelModel{std::move(basis), gamma};
}

// Builds the cluster-covariance kernel: k-means on X, per-cluster regularized
// covariances (anchor A = regularized covariance of all of X, identity if
// even that cannot be fixed), and the pairwise tables.
inline KernelModel build_kernel(const Eigen::MatrixXd& X, int k, double gamma, double eps,
                                std::uint64_t seed, int restarts = 10) {
    if (k < 1) throw ArgumentError("cluster count must be >= 1");
    if (gamma <= 0.0) throw ArgumentError("gamma must be positive");
    if (X.rows() < k) throw ArgumentError("fewer samples than clusters");

    const Eigen::Index d = X.cols();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd A;
    try {
        A = regularize(covariance(X), I, eps);
    } catch (const IllConditionedError&) {
        A = I;
    }

    Clustering clustering = kmeans_fit(X, k, seed, restarts);
    std::vector<Eigen::MatrixXd> sigmas;
    sigmas.reserve(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        std::vector<int> members;
        for (std::size_t i = 0; i < clustering.assignments.size(); ++i)
            if (clustering.assignments[i] == c) members.push_back(static_cast<int>(i));
        Eigen::MatrixXd Xc(static_cast<Eigen::Index>(members.size()), d);
        for (std::size_t r = 0; r < members.size(); ++r) Xc.row(static_cast<Eigen::Index>(r)) = X.row(members[r]);
        sigmas.push_back(regularize(covariance(Xc), A, eps));
    }
    return make_kernel_model(std::move(clustering), std::move(sigmas), gamma, eps, A);
}

// K(x,y) = n_ij exp(-gamma (x-y)' (S_i+S_j)^-1 (x-y)) with i, j the clusters
// of x and y. Strictly positive; exactly symmetric in (x,y). Note K(x,x) =
// det(2 S_i)^(-1/2), not 1.
inline double eval_kernel(const KernelModel& model, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) {
    if (x.size() != model.dim() || y.size() != model.dim())
        throw ArgumentError("kernel dimension mismatch");
    const int i = assign(model.clustering(), x.transpose());
    const int j = assign(model.clustering(), y.transpose());
    const Eigen::VectorXd diff = x - y;
    const double q = detail::quad_form(model.inv_sum(i, j), diff);
    return model.norm_factors()(i, j) * std::exp(-model.gamma * q);
}

// Gamma-independent halves of a block of kernel values: K(a,b) under gamma
// is norm(a,b) * exp(-gamma * quad(a,b)).
struct KernelPairData {
    Eigen::MatrixXd norm;
    Eigen::MatrixXd quad;
};

inline KernelPairData make_pair_data(const KernelModel& model, const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& B) {
    if (A.cols() != model.dim() || B.cols() != model.dim())
        throw ArgumentError("kernel dimension mismatch");
    const std::vector<int> ia = assign_clusters(model.clustering(), A);
    const std::vector<int> ib = assign_clusters(model.clustering(), B);
    KernelPairData out;
    out.norm.resize(A.rows(), B.rows());
    out.quad.resize(A.rows(), B.rows());
    for (Eigen::Index a = 0; a < A.rows(); ++a) {
        for (Eigen::Index b = 0; b < B.rows(); ++b) {
            const int i = ia[static_cast<std::size_t>(a)];
            const int j = ib[static_cast<std::size_t>(b)];
            const Eigen::VectorXd diff = (A.row(a) - B.row(b)).transpose();
            out.norm(a, b) = model.norm_factors()(i, j);
            out.quad(a, b) = detail::quad_form(model.inv_sum(i, j), diff);
        }
    }
    return out;
}

// Scalar-exp loop so every entry is bit-identical to an eval_kernel call.
inline Eigen::MatrixXd gram_from_pairs(const KernelPairData& pairs, double gamma) {
    if (gamma <= 0.0) throw ArgumentError("gamma must be positive");
    Eigen::MatrixXd G(pairs.norm.rows(), pairs.norm.cols());
    for (Eigen::Index a = 0; a < G.rows(); ++a)
        for (Eigen::Index b = 0; b < G.cols(); ++b)
            G(a, b) = pairs.norm(a, b) * std::exp(-gamma * pairs.quad(a, b));
    return G;
}

inline Eigen::MatrixXd gram(const KernelModel& model, const Eigen::MatrixXd& A,
                            const Eigen::MatrixXd& B) {
    return gram_from_pairs(make_pair_data(model, A, B), model.gamma);
}

// Same kernel at a different bandwidth; shares every precomputed table.
inline KernelModel rescale_gamma(const KernelModel& model, double new_gamma) {
    if (new_gamma <= 0.0) throw ArgumentError("gamma must be positive");
    return KernelModel{model.basis, new_gamma};
}

// Isotropic restriction: each S_i becomes s2_i I with s2_i = trace(S_i)/d.
// The pairwise tables then collapse to scalars: n_ij = (s2_i+s2_j)^(-d/2)
// and (S_i+S_j)^-1 = I/(s2_i+s2_j).
inline KernelModel radial_variant(const KernelModel& model) {
    const int k = model.k();
    const Eigen::Index d = model.dim();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);

    auto basis = std::make_shared<KernelBasis>();
    basis->clustering = model.clustering();
    basis->epsilon = model.epsilon();
    basis->regularizer = model.regularizer();
    std::vector<double> s2(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        s2[static_cast<std::size_t>(i)] =
            model.sigmas()[static_cast<std::size_t>(i)].trace() / static_cast<double>(d);
        basis->sigmas.push_back(s2[static_cast<std::size_t>(i)] * I);
    }
    basis->norm_factors.resize(k, k);
    basis->inv_sums.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k),
                           Eigen::MatrixXd());
    for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
            const double sum = s2[static_cast<std::size_t>(i)] + s2[static_cast<std::size_t>(j)];
            if (sum <= 0.0) throw LinalgError("nonpositive isotropic variance sum");
            const double n_ij = std::pow(sum, -static_cast<double>(d) / 2.0);
            basis->norm_factors(i, j) = n_ij;
            basis->norm_factors(j, i) = n_ij;
            Eigen::MatrixXd inv = I / sum;
            const auto sk = static_cast<std::size_t>(k);
            basis->inv_sums[static_cast<std::size_t>(i) * sk + static_cast<std::size_t>(j)] = inv;
            basis->inv_sums[static_cast<std::size_t>(j) * sk + static_cast<std::size_t>(i)] =
                std::move(inv);
        }
    }
    return KernelModel{std::move(basis), model.gamma};
}

// The function-space image of a point: the normal density centered at x with
// covariance S_{i(x)} / (2 gamma). The kernel times (gamma/pi)^(d/2) equals
// the L2 inner product of two such densities.
inline GaussianParams feature_projection(const KernelModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim()) throw ArgumentError("kernel dimension mismatch");
    const int i = assign(model.clustering(), x.transpose());
    return GaussianParams{x, model.sigmas()[static_cast<std::size_t>(i)] / (2.0 * model.gamma)};
}

// Classical RBF: K(x,y) = exp(-gamma ||x-y||^2).
struct RbfKernel {
    double gamma = 1.0;

    double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (x.size() != y.size()) throw ArgumentError("kernel dimension mismatch");
        return std::exp(-gamma * (x - y).squaredNorm());
    }
    // Squared distances; gram under any bandwidth is exp(-gamma * quad).
    Eigen::MatrixXd quad(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
        if (A.cols() != B.cols()) throw ArgumentError("kernel dimension mismatch");
        Eigen::MatrixXd Q(A.rows(), B.rows());
        for (Eigen::Index a = 0; a < A.rows(); ++a)
            for (Eigen::Index b = 0; b < B.rows(); ++b)
                Q(a, b) = (A.row(a) - B.row(b)).squaredNorm();
        return Q;
    }
    Eigen::MatrixXd gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
        Eigen::MatrixXd G = quad(A, B);
        for (Eigen::Index a = 0; a < G.rows(); ++a)
            for (Eigen::Index b = 0; b < G.cols(); ++b) G(a, b) = std::exp(-gamma * G(a, b));
        return G;
    }
};

inline RbfKernel rbf_kernel(double gamma) {
    if (gamma <= 0.0) throw ArgumentError("gamma must be positive");
    return RbfKernel{gamma};
}

// RBF over the Mahalanobis distance of the dataset covariance:
// K(x,y) = exp(-gamma (x-y)' P (x-y)) with P the inverse of the regularized
// covariance of X. Diagonal is 1 (no determinant factor).
struct MahalanobisRbfKernel {
    double gamma = 1.0;
    Eigen::MatrixXd precision;

    double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        if (x.size() != precision.rows() || y.size() != precision.rows())
            throw ArgumentError("kernel dimension mismatch");
        const Eigen::VectorXd diff = x - y;
        return std::exp(-gamma * detail::quad_form(precision, diff));
    }
    Eigen::MatrixXd quad(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
        if (A.cols() != precision.rows() || B.cols() != precision.rows())
            throw ArgumentError("kernel dimension mismatch");
        Eigen::MatrixXd Q(A.rows(), B.rows());
        for (Eigen::Index a = 0; a < A.rows(); ++a)
            for (Eigen::Index b = 0; b < B.rows(); ++b) {
                const Eigen::VectorXd diff = (A.row(a) - B.row(b)).transpose();
                Q(a, b) = detail::quad_form(precision, diff);
            }
        return Q;
    }
    Eigen::MatrixXd gram(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) const {
        Eigen::MatrixXd G = quad(A, B);
        for (Eigen::Index a = 0; a < G.rows(); ++a)
            for (Eigen::Index b = 0; b < G.cols(); ++b) G(a, b) = std::exp(-gamma * G(a, b));
        return G;
    }
};

// Precision from a covariance matrix: inverse of regularize(cov, anchor, eps),
// symmetrized.
inline Eigen::MatrixXd inverse_of_regularized(const Eigen::MatrixXd& cov,
                                              const Eigen::MatrixXd& anchor, double eps) {
    const Eigen::MatrixXd sigma = regularize(cov, anchor, eps);
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw LinalgError("regularized covariance is not positive definite");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
    return ((inv + inv.transpose()) / 2.0).eval();
}

inline MahalanobisRbfKernel mahalanobis_rbf_kernel(const Eigen::MatrixXd& X, double gamma,
                                                   double eps = 1e-10) {
    if (gamma <= 0.0) throw ArgumentError("gamma must be positive");
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(X.cols(), X.cols());
    return MahalanobisRbfKernel{gamma, inverse_of_regularized(covariance(X), I, eps)};
}

}  // namespace ckrbf
