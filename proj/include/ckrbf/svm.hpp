#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ckrbf/error.hpp"

namespace ckrbf {

// Soft-margin dual SVM instance over a precomputed Gram matrix. The solver
// never assumes a unit diagonal, so kernels with determinant normalization
// work unchanged.
struct SvmProblem {
    Eigen::MatrixXd gram;    // n x n, symmetric
    Eigen::VectorXd labels;  // entries in {-1,+1}
    double C = 1.0;
    double tol = 1e-3;
    long long max_updates = 10'000'000;  // pairwise update cap
};

struct SvmModel {
    Eigen::VectorXd dual_coef;         // alpha_i * y_i; zero off the support
    double bias = 0.0;
    std::vector<int> support_indices;  // { i : alpha_i > 0 }
    double objective = 0.0;            // maximized dual value sum(a) - 1/2 a'Qa
};

// Raised when the pairwise-update cap is hit; carries the best iterate so the
// caller can still inspect or use it.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, SvmModel best)
        : std::runtime_error(msg), best_model(std::move(best)) {}
    SvmModel best_model;
};

namespace detail {

inline SvmModel finish_model(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& G, double C) {
    const Eigen::Index n = alpha.size();
    SvmModel m;
    m.dual_coef = alpha.cwiseProduct(y);
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha[t] > 0.0) m.support_indices.push_back(static_cast<int>(t));
    m.objective = 0.5 * (alpha.sum() - alpha.dot(G));

    // Bias from the stationarity targets v_t = -y_t G_t: average over free
    // support vectors, else the midpoint of the admissible window. Any value
    // inside [vmax - tol, vmin + tol] keeps every KKT residual within tol.
    double sum_free = 0.0;
    int n_free = 0;
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
        const double v = -y[t] * G[t];
        const bool in_up = (y[t] > 0.0 && alpha[t] < C) || (y[t] < 0.0 && alpha[t] > 0.0);
        const bool in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < C);
        if (in_up && in_low) {
            sum_free += v;
            ++n_free;
        }
        if (in_up) up_max = std::max(up_max, v);
        if (in_low) low_min = std::min(low_min, v);
    }
    if (n_free > 0)
        m.bias = sum_free / n_free;
    else if (std::isfinite(up_max) && std::isfinite(low_min))
        m.bias = (up_max + low_min) / 2.0;
    else if (std::isfinite(up_max))
        m.bias = up_max;
    else if (std::isfinite(low_min))
        m.bias = low_min;
    else
        m.bias = 0.0;
    return m;
}

}  // namespace detail

// Maximizes sum(a) - 1/2 a'Qa (Q = yy' o K) under 0 <= a <= C, sum(a_i y_i)=0
// by maximal-violating-pair updates. Terminates when the violation gap drops
// to tol; every KKT residual of the returned model is then within tol. When
// `objective_trace` is given, the dual objective after each update is
// appended (non-decreasing).
inline SvmModel train_svc(const SvmProblem& p, std::vector<double>* objective_trace = nullptr) {
    const Eigen::Index n = p.gram.rows();
    if (p.gram.cols() != n) throw ArgumentError("gram matrix must be square");
    if (p.labels.size() != n) throw ArgumentError("label count does not match gram size");
    if (n < 1) throw ArgumentError("empty training set");
    if (p.C <= 0.0) throw ArgumentError("C must be positive");
    if (p.tol <= 0.0) throw ArgumentError("tolerance must be positive");
    for (Eigen::Index t = 0; t < n; ++t)
        if (p.labels[t] != -1.0 && p.labels[t] != 1.0)
            throw ArgumentError("labels must be -1 or +1");
    {
        const double scale = std::max(1.0, p.gram.cwiseAbs().maxCoeff());
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = r + 1; c < n; ++c)
                if (std::abs(p.gram(r, c) - p.gram(c, r)) > 1e-10 * scale)
                    throw ArgumentError("gram matrix must be symmetric");
    }

    const double C = p.C;
    const Eigen::VectorXd& y = p.labels;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    // Gradient of the minimized form 1/2 a'Qa - sum(a); at a = 0 it is -1.
    Eigen::VectorXd G = Eigen::VectorXd::Constant(n, -1.0);

    long long updates = 0;
    while (true) {
        // Maximal violating pair over v_t = -y_t G_t.
        double vmax = -std::numeric_limits<double>::infinity();
        double vmin = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -y[t] * G[t];
            if (((y[t] > 0.0 && alpha[t] < C) || (y[t] < 0.0 && alpha[t] > 0.0)) && v > vmax) {
                vmax = v;
                i = t;
            }
            if (((y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < C)) && v < vmin) {
                vmin = v;
                j = t;
            }
        }
        if (i < 0 || j < 0 || vmax - vmin <= p.tol) break;

        if (++updates > p.max_updates)
            throw ConvergenceError("pairwise update cap exceeded",
                                   detail::finish_model(alpha, y, G, C));

        // Analytic two-variable maximum along the feasible direction, clipped
        // to the box. Curvature K_ii + K_jj - 2 K_ij can dip below zero from
        // rounding; it is floored at a tiny positive value.
        double quad = p.gram(i, i) + p.gram(j, j) - 2.0 * p.gram(i, j);
        if (quad <= 0.0) quad = 1e-12;
        const double old_ai = alpha[i], old_aj = alpha[j];
        if (y[i] != y[j]) {
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = C + diff;
                }
            }
        } else {
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        G.array() += y.array() * (p.gram.col(i).array() * (y[i] * dai) +
                                  p.gram.col(j).array() * (y[j] * daj));
        if (objective_trace) objective_trace->push_back(0.5 * (alpha.sum() - alpha.dot(G)));
    }

    return detail::finish_model(alpha, y, G, C);
}

// sum_i dual_coef[i] * K(x, x_i) + bias for a query x whose kernel row
// against the training points is given.
inline double decision_function(const SvmModel& m, const Eigen::VectorXd& gram_row) {
    if (gram_row.size() != m.dual_coef.size())
        throw ArgumentError("gram row length does not match training size");
    return m.dual_coef.dot(gram_row) + m.bias;
}

// Sign of the decision value per row; zero maps to +1.
inline Eigen::VectorXd predict(const SvmModel& m, const Eigen::MatrixXd& gram_rows) {
    if (gram_rows.cols() != m.dual_coef.size())
        throw ArgumentError("gram row length does not match training size");
    Eigen::VectorXd out(gram_rows.rows());
    for (Eigen::Index r = 0; r < gram_rows.rows(); ++r)
        out[r] = decision_function(m, gram_rows.row(r).transpose()) < 0.0 ? -1.0 : 1.0;
    return out;
}

}  // namespace ckrbf
