#include "hbci/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>
#include <nlohmann/json.hpp>

namespace hbci {

namespace {

void validate_training_set(const TrainingSet& data) {
  const auto m = data.features.rows();
  if (m < 8) {
    throw std::invalid_argument("TrainingSet: need at least 8 rows");
  }
  if (data.labels.size() != m) {
    throw std::invalid_argument("TrainingSet: labels/features row mismatch");
  }
  if (!data.features.allFinite()) {
    throw std::invalid_argument("TrainingSet: non-finite feature value");
  }
  bool has_pos = false, has_neg = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double y = data.labels(i);
    if (y == 1.0) {
      has_pos = true;
    } else if (y == -1.0) {
      has_neg = true;
    } else {
      throw std::invalid_argument("TrainingSet: labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("TrainingSet: both classes must be present");
  }
}

/// Upper-tail p-value of an F(1, df2) statistic.
double partial_f_pvalue(double f_stat, int df2) {
  if (!(f_stat > 0.0)) return 1.0;
  if (!std::isfinite(f_stat)) return 0.0;
  const boost::math::fisher_f dist(1.0, static_cast<double>(df2));
  return boost::math::cdf(boost::math::complement(dist, f_stat));
}

/// Normal-equation workspace for stepwise regression. Column 0 of the
/// augmented design is the intercept; feature j maps to column j+1.
struct Gram {
  Eigen::MatrixXd g;    // (F+1) x (F+1)
  Eigen::VectorXd xty;  // F+1
  double yty = 0.0;
  int m = 0;

  explicit Gram(const TrainingSet& data) {
    const auto mm = data.features.rows();
    const auto f = data.features.cols();
    Eigen::MatrixXd a(mm, f + 1);
    a.col(0).setOnes();
    a.rightCols(f) = data.features;
    g.noalias() = a.transpose() * a;
    xty.noalias() = a.transpose() * data.labels;
    yty = data.labels.squaredNorm();
    m = static_cast<int>(mm);
  }

  Eigen::MatrixXd submatrix(const std::vector<int>& sel) const {
    const int k = static_cast<int>(sel.size());
    Eigen::MatrixXd sub(k + 1, k + 1);
    sub(0, 0) = g(0, 0);
    for (int i = 0; i < k; ++i) {
      sub(0, i + 1) = g(0, sel[static_cast<std::size_t>(i)] + 1);
      sub(i + 1, 0) = sub(0, i + 1);
      for (int j = 0; j <= i; ++j) {
        const double v = g(sel[static_cast<std::size_t>(i)] + 1,
                           sel[static_cast<std::size_t>(j)] + 1);
        sub(i + 1, j + 1) = v;
        sub(j + 1, i + 1) = v;
      }
    }
    return sub;
  }

  Eigen::VectorXd subrhs(const std::vector<int>& sel) const {
    Eigen::VectorXd rhs(sel.size() + 1);
    rhs(0) = xty(0);
    for (std::size_t i = 0; i < sel.size(); ++i) rhs(i + 1) = xty(sel[i] + 1);
    return rhs;
  }

  /// Cross products between the augmented selected columns and feature j.
  Eigen::VectorXd crosscol(const std::vector<int>& sel, int j) const {
    Eigen::VectorXd v(sel.size() + 1);
    v(0) = g(0, j + 1);
    for (std::size_t i = 0; i < sel.size(); ++i) v(i + 1) = g(sel[i] + 1, j + 1);
    return v;
  }
};

constexpr double kCollinearTol = 1e-10;

}  // namespace

TrainingSet training_set_from_epochs(const std::vector<Epoch>& epochs,
                                     int factor) {
  if (epochs.empty()) {
    throw std::invalid_argument("training_set_from_epochs: no epochs");
  }
  TrainingSet out;
  const FeatureVector first = decimate_epoch(epochs.front(), factor);
  out.features.resize(static_cast<Eigen::Index>(epochs.size()),
                      static_cast<Eigen::Index>(first.size()));
  out.labels.resize(static_cast<Eigen::Index>(epochs.size()));
  for (std::size_t r = 0; r < epochs.size(); ++r) {
    if (!epochs[r].is_target.has_value()) {
      throw std::invalid_argument(
          "training_set_from_epochs: epoch without is_target label");
    }
    const FeatureVector fv = decimate_epoch(epochs[r], factor);
    if (fv.size() != first.size()) {
      throw std::invalid_argument(
          "training_set_from_epochs: inconsistent feature length");
    }
    for (std::size_t i = 0; i < fv.size(); ++i) {
      out.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) =
          fv[i];
    }
    out.labels(static_cast<Eigen::Index>(r)) = *epochs[r].is_target ? 1.0 : -1.0;
  }
  return out;
}

SwldaModel train_swlda(const TrainingSet& data, double p_enter, double p_remove,
                       int max_features, StepwiseTrace* trace) {
  validate_training_set(data);
  if (p_enter <= 0.0 || p_enter > 1.0 || p_remove <= 0.0 || p_remove > 1.0) {
    throw std::invalid_argument("train_swlda: p thresholds must be in (0,1]");
  }
  if (max_features < 1) {
    throw std::invalid_argument("train_swlda: max_features must be >= 1");
  }

  const Gram gram(data);
  const int n_features = static_cast<int>(data.features.cols());
  std::vector<int> sel;
  std::vector<bool> banned(static_cast<std::size_t>(n_features), false);
  std::vector<std::string> warnings;

  // Factor the current normal equations; nullopt when numerically rank
  // deficient.
  const auto factor_current =
      [&](const std::vector<int>& s) -> std::optional<Eigen::LDLT<Eigen::MatrixXd>> {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram.submatrix(s));
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const auto d = ldlt.vectorD();
    if (d.minCoeff() <= kCollinearTol * std::max(1.0, d.maxCoeff())) {
      return std::nullopt;
    }
    return ldlt;
  };

  bool changed = true;
  int guard = 0;
  while (changed && guard++ < 10000) {
    changed = false;

    // Forward: add the best candidate below p_enter.
    if (static_cast<int>(sel.size()) < max_features) {
      const int df2 = gram.m - static_cast<int>(sel.size()) - 2;
      if (df2 >= 1) {
        auto ldlt = factor_current(sel);
        while (!ldlt && !sel.empty()) {
          warnings.push_back("dropped feature " + std::to_string(sel.back()) +
                             ": selected set became rank deficient");
          banned[static_cast<std::size_t>(sel.back())] = true;
          sel.pop_back();
          ldlt = factor_current(sel);
        }
        if (!ldlt) {
          throw std::runtime_error("train_swlda: degenerate intercept column");
        }
        const Eigen::VectorXd beta = ldlt->solve(gram.subrhs(sel));
        const double rss =
            std::max(0.0, gram.yty - gram.subrhs(sel).dot(beta));

        StepwiseStep step;
        step.forward = true;
        step.selected_before = sel;

        int best_j = -1;
        double best_p = 1.0;
        // No candidate can improve a perfect fit.
        if (rss > 1e-12 * std::max(1.0, gram.yty)) {
          for (int j = 0; j < n_features; ++j) {
            if (banned[static_cast<std::size_t>(j)]) continue;
            if (std::find(sel.begin(), sel.end(), j) != sel.end()) continue;
            const double diag = gram.g(j + 1, j + 1);
            if (diag <= 0.0) continue;
            const Eigen::VectorXd cross = gram.crosscol(sel, j);
            const double denom = diag - cross.dot(ldlt->solve(cross));
            if (denom <= kCollinearTol * diag) continue;  // collinear candidate
            const double num = gram.xty(j + 1) - cross.dot(beta);
            const double delta = num * num / denom;
            const double rss_new = std::max(0.0, rss - delta);
            const double p = rss_new <= 1e-12 * rss
                                 ? 0.0
                                 : partial_f_pvalue(delta * df2 / rss_new, df2);
            if (trace) step.pvalues.emplace_back(j, p);
            if (p < best_p) {
              best_p = p;
              best_j = j;
            }
          }
        }
        if (best_j >= 0 && best_p < p_enter) {
          sel.push_back(best_j);
          step.action = best_j;
          changed = true;
        }
        if (trace) trace->push_back(std::move(step));
      }
    }

    // Backward: drop the worst selected feature while it exceeds p_remove.
    while (!sel.empty()) {
      const int k = static_cast<int>(sel.size());
      const int df2 = gram.m - k - 1;
      if (df2 < 1) break;
      const auto ldlt = factor_current(sel);
      if (!ldlt) {
        warnings.push_back("dropped feature " + std::to_string(sel.back()) +
                           ": selected set became rank deficient");
        banned[static_cast<std::size_t>(sel.back())] = true;
        sel.pop_back();
        changed = true;
        continue;
      }
      const Eigen::VectorXd rhs = gram.subrhs(sel);
      const Eigen::VectorXd beta = ldlt->solve(rhs);
      const double rss = std::max(0.0, gram.yty - rhs.dot(beta));
      const double sigma2 = rss / df2;

      StepwiseStep step;
      step.forward = false;
      step.selected_before = sel;

      int worst_i = -1;
      double worst_p = -1.0;
      for (int i = 0; i < k; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(k + 1);
        e(i + 1) = 1.0;
        const double inv_diag = ldlt->solve(e)(i + 1);
        double p;
        if (sigma2 <= 0.0 || inv_diag <= 0.0) {
          p = 0.0;  // perfect fit keeps every term
        } else {
          const double f_stat =
              beta(i + 1) * beta(i + 1) / (inv_diag * sigma2);
          p = partial_f_pvalue(f_stat, df2);
        }
        if (trace) step.pvalues.emplace_back(sel[static_cast<std::size_t>(i)], p);
        if (p > worst_p) {
          worst_p = p;
          worst_i = i;
        }
      }
      const bool removing = worst_i >= 0 && worst_p > p_remove;
      if (trace) {
        if (removing) step.action = sel[static_cast<std::size_t>(worst_i)];
        trace->push_back(std::move(step));
      }
      if (removing) {
        sel.erase(sel.begin() + worst_i);
        changed = true;
      } else {
        break;
      }
    }
  }

  if (sel.empty()) {
    throw EmptyModelError("train_swlda: no feature passed p_enter=" +
                          std::to_string(p_enter));
  }

  const auto ldlt = factor_current(sel);
  if (!ldlt) {
    throw std::runtime_error("train_swlda: final refit is rank deficient");
  }
  const Eigen::VectorXd beta = ldlt->solve(gram.subrhs(sel));

  SwldaModel model;
  model.selected = sel;
  model.weights.resize(sel.size());
  for (std::size_t i = 0; i < sel.size(); ++i) {
    model.weights[i] = beta(static_cast<Eigen::Index>(i) + 1);
  }
  model.intercept = beta(0);
  model.meta = SwldaMeta{p_enter,    p_remove,
                         max_features, gram.m,
                         n_features, "swlda",
                         std::move(warnings)};
  return model;
}

SwldaModel train_lda(const TrainingSet& data, double ridge) {
  validate_training_set(data);
  if (ridge < 0.0) {
    throw std::invalid_argument("train_lda: ridge must be >= 0");
  }
  const auto m = data.features.rows();
  const auto f = data.features.cols();

  Eigen::VectorXd mu_pos = Eigen::VectorXd::Zero(f);
  Eigen::VectorXd mu_neg = Eigen::VectorXd::Zero(f);
  int n_pos = 0, n_neg = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (data.labels(i) > 0) {
      mu_pos += data.features.row(i).transpose();
      ++n_pos;
    } else {
      mu_neg += data.features.row(i).transpose();
      ++n_neg;
    }
  }
  mu_pos /= n_pos;
  mu_neg /= n_neg;

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(f, f);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd d =
        data.features.row(i).transpose() - (data.labels(i) > 0 ? mu_pos : mu_neg);
    scatter.noalias() += d * d.transpose();
  }
  Eigen::MatrixXd cov = scatter / static_cast<double>(m - 2);
  const double reg = ridge * cov.trace() / static_cast<double>(f);
  cov.diagonal().array() += reg;

  const Eigen::VectorXd diff = mu_pos - mu_neg;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const Eigen::VectorXd w = ldlt.solve(diff);
  const double residual = (cov * w - diff).norm();
  if (ldlt.info() != Eigen::Success || !w.allFinite() ||
      residual > 1e-6 * (diff.norm() + 1.0)) {
    throw std::runtime_error(
        "train_lda: singular pooled covariance (increase ridge)");
  }

  SwldaModel model;
  model.selected.resize(static_cast<std::size_t>(f));
  std::iota(model.selected.begin(), model.selected.end(), 0);
  model.weights.assign(w.data(), w.data() + f);
  model.intercept = -0.5 * w.dot(mu_pos + mu_neg);
  model.meta = SwldaMeta{0.0,
                         0.0,
                         static_cast<int>(f),
                         static_cast<int>(m),
                         static_cast<int>(f),
                         "lda",
                         {}};
  return model;
}

double score(const SwldaModel& model, const FeatureVector& fv) {
  if (static_cast<int>(fv.size()) != model.meta.n_features) {
    throw std::invalid_argument(
        "score: feature vector length " + std::to_string(fv.size()) +
        " does not match model dimension " +
        std::to_string(model.meta.n_features));
  }
  double s = model.intercept;
  for (std::size_t i = 0; i < model.selected.size(); ++i) {
    s += model.weights[i] * fv[static_cast<std::size_t>(model.selected[i])];
  }
  return s;
}

SelectionResult select(const SwldaModel& model,
                       const std::array<FeatureVector, kNumCodes>& averaged) {
  SelectionResult result;
  for (int c = 0; c < kNumCodes; ++c) {
    result.scores[static_cast<std::size_t>(c)] =
        score(model, averaged[static_cast<std::size_t>(c)]);
  }
  int best = 0;
  for (int c = 1; c < kNumCodes; ++c) {
    if (result.scores[static_cast<std::size_t>(c)] >
        result.scores[static_cast<std::size_t>(best)]) {
      best = c;  // strict: ties keep the lowest code
    }
  }
  result.chosen = best + 1;
  return result;
}

std::string model_to_json(const SwldaModel& model) {
  nlohmann::json j;
  j["selected"] = model.selected;
  j["weights"] = model.weights;
  j["intercept"] = model.intercept;
  j["meta"] = {
      {"p_enter", model.meta.p_enter},
      {"p_remove", model.meta.p_remove},
      {"max_features", model.meta.max_features},
      {"n_train", model.meta.n_train},
      {"n_features", model.meta.n_features},
      {"method", model.meta.method},
      {"warnings", model.meta.warnings},
  };
  return j.dump(2);
}

SwldaModel model_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SwldaModel model;
  model.selected = j.at("selected").get<std::vector<int>>();
  model.weights = j.at("weights").get<std::vector<double>>();
  model.intercept = j.at("intercept").get<double>();
  const auto& meta = j.at("meta");
  model.meta.p_enter = meta.at("p_enter").get<double>();
  model.meta.p_remove = meta.at("p_remove").get<double>();
  model.meta.max_features = meta.at("max_features").get<int>();
  model.meta.n_train = meta.at("n_train").get<int>();
  model.meta.n_features = meta.at("n_features").get<int>();
  model.meta.method = meta.at("method").get<std::string>();
  if (meta.contains("warnings")) {
    model.meta.warnings = meta.at("warnings").get<std::vector<std::string>>();
  }

  if (model.selected.size() != model.weights.size()) {
    throw std::invalid_argument(
        "model_from_json: selected/weights length mismatch");
  }
  if (static_cast<int>(model.selected.size()) > model.meta.max_features) {
    throw std::invalid_argument(
        "model_from_json: more selected features than max_features");
  }
  std::set<int> seen;
  for (int idx : model.selected) {
    if (idx < 0 || idx >= model.meta.n_features) {
      throw std::invalid_argument(
          "model_from_json: selected index out of range");
    }
    if (!seen.insert(idx).second) {
      throw std::invalid_argument(
          "model_from_json: duplicate selected index");
    }
  }
  return model;
}

void save_model(const SwldaModel& model, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("save_model: cannot open " + path.string());
  }
  os << model_to_json(model) << '\n';
}

SwldaModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("load_model: cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << is.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace hbci
