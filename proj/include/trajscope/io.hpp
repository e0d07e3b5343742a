#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajscope/cvae.hpp"
#include "trajscope/poi.hpp"
#include "trajscope/preprocess.hpp"
#include "trajscope/scoring.hpp"
#include "trajscope/simulate.hpp"

namespace trajscope {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

std::string read_file(const std::string& path);

/// Write via a temp file + rename so interrupted runs never leave a
/// half-written artifact.
void atomic_write_file(const std::string& path, const std::string& bytes);

// --- GridSpec ---------------------------------------------------------------

std::string grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const std::string& text);

// --- Trajectories (JSONL, one fix per line, sorted by agent then time) -------

std::string trajectories_to_jsonl(const std::vector<RawTrajectory>& trajs);
std::vector<RawTrajectory> trajectories_from_jsonl(const std::string& text,
                                                   const std::string& filename);

// --- Token sequences (JSONL) and corpus metadata (JSON) ----------------------

std::string sequences_to_jsonl(const std::vector<TokenSequence>& seqs);
std::vector<TokenSequence> sequences_from_jsonl(const std::string& text,
                                                const std::string& filename);

std::string meta_to_json(const GridSpec& g, const PreprocessConfig& cfg, const CorpusStats& stats);
void meta_from_json(const std::string& text, GridSpec& g, PreprocessConfig& cfg,
                    CorpusStats& stats);

// --- POIs (CSV with header poi_id,name,category,lat,lon) ---------------------

std::string pois_to_csv(const std::vector<Poi>& pois);
std::vector<Poi> pois_from_csv(const std::string& text, const std::string& filename);

// --- Labels (CSV agent_id,label) ---------------------------------------------

std::string labels_to_csv(const std::map<std::string, int>& labels);
std::map<std::string, int> labels_from_csv(const std::string& text, const std::string& filename);

// --- Cluster model / grid vectors / cluster report ---------------------------

std::string cluster_model_to_json(const ClusterModel& m);
ClusterModel cluster_model_from_json(const std::string& text);

std::string grid_vectors_to_jsonl(const GridPoiVectors& gv);
GridPoiVectors grid_vectors_from_jsonl(const std::string& text, const std::string& filename,
                                       int& n_classes);

std::string cluster_report_to_csv(const std::vector<std::pair<int, int>>& report);

// --- Scores / PR curves / ablation report ------------------------------------

std::string scores_to_csv(const std::vector<ScoreRecord>& scores);
std::vector<ScoreRecord> scores_from_csv(const std::string& text, const std::string& filename);

std::string pr_curve_to_json(const PrCurve& curve);

std::string ablation_to_csv(const std::vector<AblationRow>& rows);

/// Ground-truth diagnostics: labels plus the injected windows.
std::string truth_to_json(const GroundTruth& truth);

// --- Model checkpoint ---------------------------------------------------------

/// Checkpoint layout: an 8-byte little-endian header length, a JSON
/// header (version "cavae-v1", hyperparameters, vocab size, context
/// mode, agent-id -> row table, tensor shapes), then the tensors as raw
/// little-endian f64 in for_each_tensor order, column-major.
struct Checkpoint {
  std::string version = "cavae-v1";
  HyperParams hp;
  int vocab = 0;
  int k_poi = 0;
  std::string context_mode = "none";
  std::map<std::string, int> agent_rows;
  ModelParams<double> params;
};

std::string checkpoint_to_bytes(const Checkpoint& ck);
Checkpoint checkpoint_from_bytes(const std::string& bytes);

}  // namespace trajscope
