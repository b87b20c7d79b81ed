#pragma once

#include <json.hpp>

#include <Eigen/Dense>

#include <ostream>
#include <vector>

#include "ckrbf/clustering.hpp"
#include "ckrbf/dataset.hpp"
#include "ckrbf/evaluation.hpp"
#include "ckrbf/kernel.hpp"
#include "ckrbf/svm.hpp"

namespace ckrbf {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ordered_json to_json(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline ordered_json to_json(const Clustering& c) {
    ordered_json j;
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["inertia"] = c.inertia;
    j["centroids"] = to_json(c.centroids);
    j["assignments"] = c.assignments;
    return j;
}

inline ordered_json to_json(const KernelModel& m) {
    ordered_json j;
    j["gamma"] = m.gamma;
    j["eps"] = m.epsilon();
    j["clustering"] = to_json(m.clustering());
    ordered_json sigmas = ordered_json::array();
    for (const auto& s : m.sigmas()) sigmas.push_back(to_json(s));
    j["sigmas"] = std::move(sigmas);
    return j;
}

inline ordered_json to_json(const SvmModel& m) {
    ordered_json j;
    j["bias"] = m.bias;
    j["objective"] = m.objective;
    j["support_indices"] = m.support_indices;
    j["dual_coef"] = to_json(m.dual_coef);
    return j;
}

inline ordered_json to_json(const GridSpec& g) {
    ordered_json j;
    j["c_values"] = g.c_values;
    j["gamma_values"] = g.gamma_values;
    return j;
}

inline ordered_json to_json(const GridResult& r) {
    ordered_json j;
    j["dataset"] = r.dataset_id;
    j["kernel"] = r.kernel_id;
    j["folds"] = r.folds;
    j["seed"] = r.seed;
    j["grid"] = to_json(r.spec);
    j["scores"] = to_json(r.scores);
    j["best_score"] = r.best_score();
    return j;
}

inline ordered_json to_json(const PfCurve& c) {
    ordered_json j;
    j["thresholds"] = c.thresholds;
    j["probabilities"] = c.probabilities;
    return j;
}

inline ordered_json to_json(const DatasetDiagnostics& d) {
    ordered_json j;
    j["dataset"] = d.dataset_id;
    j["d"] = d.d;
    j["n_neg"] = d.n_neg;
    j["n_pos"] = d.n_pos;
    j["sigma1_vs_identity"] = d.sigma1_vs_identity;
    j["sigma2_vs_identity"] = d.sigma2_vs_identity;
    j["sigma2_vs_sigma1"] = d.sigma2_vs_sigma1;
    j["sum_vs_total"] = d.sum_vs_total;
    return j;
}

inline ordered_json to_json(const CvReport& r) {
    ordered_json j;
    j["folds"] = r.folds;
    j["fold_accuracy"] = r.fold_accuracy;
    j["skipped_folds"] = r.skipped_folds;
    j["mean_accuracy"] = r.mean_accuracy;
    return j;
}

// Plot-ready long form: one `C,gamma,accuracy` row per grid cell, C varying
// slowest. Numbers use round-trip decimal precision.
inline void write_heatmap_csv(std::ostream& out, const GridResult& r) {
    out << "C,gamma,accuracy\n";
    for (std::size_t ci = 0; ci < r.spec.c_values.size(); ++ci)
        for (std::size_t gj = 0; gj < r.spec.gamma_values.size(); ++gj)
            out << detail::format_double(r.spec.c_values[ci]) << ','
                << detail::format_double(r.spec.gamma_values[gj]) << ','
                << detail::format_double(r.scores(static_cast<Eigen::Index>(ci),
                                                  static_cast<Eigen::Index>(gj)))
                << '\n';
}

inline void write_pf_csv(std::ostream& out, const PfCurve& c) {
    out << "alpha,probability\n";
    for (std::size_t i = 0; i < c.thresholds.size(); ++i)
        out << detail::format_double(c.thresholds[i]) << ','
            << detail::format_double(c.probabilities[i]) << '\n';
}

inline void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) out << ',';
            out << detail::format_double(m(r, c));
        }
        out << '\n';
    }
}

inline void write_diagnostics_csv(std::ostream& out, const DatasetDiagnostics& d) {
    out << "dataset,d,n_neg,n_pos,sigma1_vs_identity,sigma2_vs_identity,"
           "sigma2_vs_sigma1,sum_vs_total\n";
    out << d.dataset_id << ',' << d.d << ',' << d.n_neg << ',' << d.n_pos << ','
        << detail::format_double(d.sigma1_vs_identity) << ','
        << detail::format_double(d.sigma2_vs_identity) << ','
        << detail::format_double(d.sigma2_vs_sigma1) << ','
        << detail::format_double(d.sum_vs_total) << '\n';
}

}  // namespace ckrbf
