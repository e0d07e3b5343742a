#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trajscope/context.hpp"
#include "trajscope/io.hpp"
#include "trajscope/simulate.hpp"
#include "trajscope/train.hpp"

namespace trajscope {

/// Inputs for one train+score+evaluate pass in a fixed context mode.
struct ModeRunInput {
  ContextMode mode = ContextMode::kNone;
  int vocab = 0;  // grid vocabulary size V
  const std::vector<TokenSequence>* train = nullptr;
  const std::vector<TokenSequence>* test = nullptr;
  const GridPoiVectors* grid_vecs = nullptr;  // required by POI modes
  int n_classes = 0;
  const std::map<std::string, int>* labels = nullptr;  // optional; enables the PR curve
  HyperParams hp;
  int score_threads = 1;
};

struct ModeRunResult {
  ContextMode mode = ContextMode::kNone;
  Checkpoint checkpoint;
  std::vector<double> epoch_losses;
  std::vector<ScoreRecord> scores;  // test split, input order
  std::optional<PrCurve> pr;
};

ModeRunResult run_mode(const ModeRunInput& in);

/// Full desk-scale experiment: simulate, preprocess, build POI context,
/// then train/score/evaluate every requested mode on the shared dataset.
struct ExperimentConfig {
  SimConfig sim;
  PreprocessConfig prep;
  double poi_radius_m = 500.0;
  int n_clusters = 16;
  HyperParams hp;
  std::vector<ContextMode> modes = {ContextMode::kNone, ContextMode::kPoiCategories,
                                    ContextMode::kPoiContextual, ContextMode::kAgentId,
                                    ContextMode::kCombined};
  int score_threads = 1;
};

struct ExperimentResult {
  CorpusStats stats;
  GroundTruth truth;
  std::vector<ModeRunResult> mode_results;
  std::string ablation_csv;

  double ap(ContextMode mode) const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace trajscope
