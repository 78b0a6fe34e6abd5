#include "g2d/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace g2d {

void CsvmConfig::validate() const
{
    if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("SVM C must be positive");
    if (!(tolerance > 0.0)) throw ConfigError("SVM tolerance must be positive");
    if (max_iterations < 1) throw ConfigError("SVM max_iterations must be positive");
}

std::vector<double> default_c_grid()
{
    std::vector<double> grid(10);
    for (int k = 0; k < 10; ++k) grid[k] = std::pow(10.0, -4.0 + 8.0 * k / 9.0);
    grid.front() = 1e-4;
    grid.back() = 1e4;
    return grid;
}

double SvmModel::decision(const Eigen::Ref<const Eigen::RowVectorXd>& kernel_row) const
{
    if (kernel_row.size() != alpha.size()) throw ConfigError("kernel row length != training set size");
    double f = bias;
    for (int i : support) f += alpha[i] * y[i] * kernel_row[i];
    return f;
}

SvmModel smo_train(const Eigen::Ref<const Eigen::MatrixXd>& kernel, std::span<const int> labels, const CsvmConfig& config)
{
    config.validate();
    const Eigen::Index n = kernel.rows();
    if (kernel.cols() != n || static_cast<Eigen::Index>(labels.size()) != n)
        throw ConfigError("SVM needs a square kernel matrix matching the label count");
    if (!kernel.allFinite()) throw ConfigError("kernel matrix contains non-finite entries");
    bool has_pos = false, has_neg = false;
    for (int l : labels) {
        if (l == 1)
            has_pos = true;
        else if (l == -1)
            has_neg = true;
        else
            throw ConfigError("binary SVM labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw ConfigError("SVM training needs both classes present");

    const double C = config.C;
    SvmModel m;
    m.C = C;
    m.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) m.y[i] = labels[i];
    m.alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q alpha - e
    const auto& y = m.y;
    auto& alpha = m.alpha;
    auto q = [&](Eigen::Index i, Eigen::Index j) { return y[i] * y[j] * kernel(i, j); };
    constexpr double tau = 1e-12;

    auto in_up = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

    while (m.iterations < config.max_iterations) {
        Eigen::Index i = -1, j = -1;
        double gmax = -std::numeric_limits<double>::infinity(), gmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (i < 0 || j < 0 || gmax - gmin < config.tolerance) {
            m.converged = true;
            break;
        }

        const double ai = alpha[i], aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0) quad = tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0) quad = tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = ai + aj;
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
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = sum;
                }
                if (alpha[i] < 0) {
                    alpha[i] = 0;
                    alpha[j] = sum;
                }
            }
        }

        const double dai = alpha[i] - ai, daj = alpha[j] - aj;
        for (Eigen::Index t = 0; t < n; ++t) grad[t] += q(t, i) * dai + q(t, j) * daj;
        ++m.iterations;
        m.dual_objective.push_back(0.5 * alpha.sum() - 0.5 * alpha.dot(grad));
    }

    // Bias from the free vectors, or the midpoint of the feasible interval.
    double upper = std::numeric_limits<double>::infinity(), lower = -upper, free_sum = 0.0;
    int free_count = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= C) {
            if (y[t] < 0)
                upper = std::min(upper, yg);
            else
                lower = std::max(lower, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] > 0)
                upper = std::min(upper, yg);
            else
                lower = std::max(lower, yg);
        } else {
            free_sum += yg;
            ++free_count;
        }
    }
    const double rho = free_count > 0 ? free_sum / free_count : 0.5 * (upper + lower);
    m.bias = -rho;
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha[t] > 0) m.support.push_back(static_cast<int>(t));
    return m;
}

double dual_objective(const Eigen::Ref<const Eigen::MatrixXd>& kernel, const SvmModel& model)
{
    const Eigen::VectorXd ay = model.alpha.cwiseProduct(model.y);
    return model.alpha.sum() - 0.5 * ay.dot(kernel * ay);
}

Eigen::VectorXd kkt_residuals(const Eigen::Ref<const Eigen::MatrixXd>& kernel, const SvmModel& model)
{
    const Eigen::Index n = model.alpha.size();
    Eigen::VectorXd r(n);
    const Eigen::VectorXd ay = model.alpha.cwiseProduct(model.y);
    const Eigen::VectorXd f = (kernel * ay).array() + model.bias;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double margin = model.y[i] * f[i];
        if (model.alpha[i] <= 0)
            r[i] = std::max(0.0, 1.0 - margin);
        else if (model.alpha[i] >= model.C)
            r[i] = std::max(0.0, margin - 1.0);
        else
            r[i] = std::abs(margin - 1.0);
    }
    return r;
}

std::vector<int> svm_predict(const SvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& kernel_rows)
{
    std::vector<int> out(kernel_rows.rows());
    for (Eigen::Index r = 0; r < kernel_rows.rows(); ++r) out[r] = model.decision(kernel_rows.row(r)) >= 0.0 ? 1 : -1;
    return out;
}

MulticlassSvm train_multiclass(const Eigen::Ref<const Eigen::MatrixXd>& kernel, std::span<const int> labels, int classes,
                               const CsvmConfig& config)
{
    if (classes < 2) throw ConfigError("multiclass SVM needs at least two classes");
    MulticlassSvm out;
    out.classes = classes;
    std::vector<std::vector<int>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) throw ConfigError("SVM label outside [0, classes)");
        by_class[labels[i]].push_back(static_cast<int>(i));
    }
    for (int a = 0; a < classes; ++a) {
        for (int b = a + 1; b < classes; ++b) {
            if (by_class[a].empty() || by_class[b].empty()) continue;
            MulticlassSvm::PairModel pm;
            pm.positive = a;
            pm.negative = b;
            pm.rows = by_class[a];
            pm.rows.insert(pm.rows.end(), by_class[b].begin(), by_class[b].end());
            std::sort(pm.rows.begin(), pm.rows.end());
            const auto k = static_cast<Eigen::Index>(pm.rows.size());
            Eigen::MatrixXd sub(k, k);
            std::vector<int> y(k);
            for (Eigen::Index r = 0; r < k; ++r) {
                y[r] = labels[pm.rows[r]] == a ? 1 : -1;
                for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = kernel(pm.rows[r], pm.rows[c]);
            }
            pm.model = smo_train(sub, y, config);
            pm.model.dual_objective.clear();
            pm.model.dual_objective.shrink_to_fit();
            out.pairs.push_back(std::move(pm));
        }
    }
    if (out.pairs.empty()) throw ConfigError("multiclass SVM training needs at least two classes present");
    return out;
}

std::vector<int> predict_multiclass(const MulticlassSvm& model, const Eigen::Ref<const Eigen::MatrixXd>& kernel_rows)
{
    std::vector<int> out(kernel_rows.rows());
    std::vector<int> votes(model.classes);
    std::vector<double> score(model.classes);
    Eigen::RowVectorXd row;
    for (Eigen::Index r = 0; r < kernel_rows.rows(); ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        std::fill(score.begin(), score.end(), 0.0);
        for (const auto& pm : model.pairs) {
            row.resize(static_cast<Eigen::Index>(pm.rows.size()));
            for (std::size_t c = 0; c < pm.rows.size(); ++c) row[c] = kernel_rows(r, pm.rows[c]);
            const double d = pm.model.decision(row);
            ++votes[d >= 0.0 ? pm.positive : pm.negative];
            score[pm.positive] += d;
            score[pm.negative] -= d;
        }
        int best = 0;
        for (int k = 1; k < model.classes; ++k)
            if (votes[k] > votes[best] || (votes[k] == votes[best] && score[k] > score[best])) best = k;
        out[r] = best;
    }
    return out;
}

}  // namespace g2d
