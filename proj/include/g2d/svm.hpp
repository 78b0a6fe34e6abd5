#pragma once

#include "g2d/graph.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace g2d {

struct CsvmConfig {
    double C = 1.0;
    double tolerance = 1e-3;  ///< KKT violation gap at which SMO stops
    long long max_iterations = 10'000'000;

    void validate() const;
};

/// Ten logarithmically spaced values from 1e-4 to 1e4 inclusive.
std::vector<double> default_c_grid();

/// Binary soft-margin SVM in dual form: f(x) = sum_i alpha_i y_i k(x_i, x) + b.
struct SvmModel {
    Eigen::VectorXd alpha;
    Eigen::VectorXd y;  ///< +1 / -1 per training point
    double bias = 0.0;
    double C = 0.0;
    std::vector<int> support;  ///< indices with alpha > 0
    long long iterations = 0;
    std::vector<double> dual_objective;  ///< after every iteration
    bool converged = false;

    /// Decision value from a row of kernel values against all training points.
    double decision(const Eigen::Ref<const Eigen::RowVectorXd>& kernel_row) const;
};

/// Sequential minimal optimization with maximal-violating-pair selection on a
/// precomputed kernel submatrix. Labels must be +1 or -1 with both present.
SvmModel smo_train(const Eigen::Ref<const Eigen::MatrixXd>& kernel, std::span<const int> labels, const CsvmConfig& config);

/// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
double dual_objective(const Eigen::Ref<const Eigen::MatrixXd>& kernel, const SvmModel& model);

/// Per-point KKT violation given the training kernel: how far y_i f(x_i)
/// falls outside what the point's alpha allows.
Eigen::VectorXd kkt_residuals(const Eigen::Ref<const Eigen::MatrixXd>& kernel, const SvmModel& model);

/// Sign of the decision values; exactly 0 maps to +1.
std::vector<int> svm_predict(const SvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& kernel_rows);

/// One-vs-one multiclass SVM over labels 0..k-1.
struct MulticlassSvm {
    int classes = 0;
    struct PairModel {
        int positive = 0;  ///< smaller class index, mapped to +1
        int negative = 0;
        std::vector<int> rows;  ///< training rows used by this pair
        SvmModel model;
    };
    std::vector<PairModel> pairs;
};

MulticlassSvm train_multiclass(const Eigen::Ref<const Eigen::MatrixXd>& kernel, std::span<const int> labels, int classes,
                               const CsvmConfig& config);

/// Majority vote over pairwise decisions; ties are broken by the summed
/// decision values in favor of each class, then by the lower class index.
/// kernel_rows is (test x train) against the full training set.
std::vector<int> predict_multiclass(const MulticlassSvm& model, const Eigen::Ref<const Eigen::MatrixXd>& kernel_rows);

}  // namespace g2d
