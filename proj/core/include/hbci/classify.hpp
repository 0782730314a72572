// Target classification: SWLDA (stepwise linear regression with
// partial-F feature selection) and ridge-regularized LDA, scoring
// averaged epochs and picking the attended code by argmax.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hbci/dsp.hpp"
#include "hbci/types.hpp"

namespace hbci {

/// Labelled single-epoch features: one row per epoch, labels +1 (target)
/// or -1 (non-target).
struct TrainingSet {
  Eigen::MatrixXd features;  // M x n_features
  Eigen::VectorXd labels;    // M, values in {+1, -1}
};

/// Decimate labelled epochs into a TrainingSet. Every epoch must carry
/// is_target.
TrainingSet training_set_from_epochs(const std::vector<Epoch>& epochs,
                                     int factor = kDecimationFactor);

struct SwldaMeta {
  double p_enter = 0.10;
  double p_remove = 0.15;
  int max_features = 60;
  int n_train = 0;
  int n_features = 0;
  std::string method;  // "swlda" or "lda"
  std::vector<std::string> warnings;
};

/// Linear discriminant: selected feature indices, one weight per selected
/// index, and an intercept. score(x) = intercept + sum w_i * x[sel_i].
struct SwldaModel {
  std::vector<int> selected;
  std::vector<double> weights;
  double intercept = 0.0;
  SwldaMeta meta;
};

/// Stepwise selection terminated with nothing selected (no candidate
/// passed p_enter). Callers may relax p_enter and retrain.
class EmptyModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One stepwise scan: every candidate (forward) or selected feature
/// (backward) with its partial-F p-value, and the action taken.
struct StepwiseStep {
  bool forward = true;
  std::vector<int> selected_before;
  std::vector<std::pair<int, double>> pvalues;  // (feature, p)
  int action = -1;                              // added/removed feature, -1 none
};
using StepwiseTrace = std::vector<StepwiseStep>;

/// Forward/backward stepwise regression of +-1 labels on features.
/// Forward: add the candidate with the smallest partial-F p-value while
/// it is below p_enter. Backward: drop any selected feature whose p-value
/// rises above p_remove. Stops at a fixpoint or max_features. Weights are
/// the ordinary least-squares fit on the selected columns. A non-null
/// trace records every scan's p-values.
SwldaModel train_swlda(const TrainingSet& data, double p_enter = 0.10,
                       double p_remove = 0.15, int max_features = 60,
                       StepwiseTrace* trace = nullptr);

/// Plain LDA with a dimensionless ridge: weights solve
/// (Sigma_pooled + ridge * trace(Sigma)/dim * I) w = mu+ - mu-, intercept
/// centers the decision at the class-mean midpoint. All features selected.
SwldaModel train_lda(const TrainingSet& data, double ridge = 0.01);

/// intercept + sum of weights over the selected entries of fv.
double score(const SwldaModel& model, const FeatureVector& fv);

struct SelectionResult {
  int chosen = 1;  // lowest code achieving the maximum score
  std::array<double, kNumCodes> scores{};
};

/// Scores the four per-code averaged feature vectors (index c holds code
/// c+1) and picks the argmax, ties broken toward the lowest code.
SelectionResult select(const SwldaModel& model,
                       const std::array<FeatureVector, kNumCodes>& averaged);

/// JSON persistence: {selected:[...], weights:[...], intercept, meta:{..}}.
/// Loading rejects length mismatches and out-of-range indices.
std::string model_to_json(const SwldaModel& model);
SwldaModel model_from_json(const std::string& text);
void save_model(const SwldaModel& model, const std::filesystem::path& path);
SwldaModel load_model(const std::filesystem::path& path);

}  // namespace hbci
