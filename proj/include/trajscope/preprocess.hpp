#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajscope/geo.hpp"

namespace trajscope {

/// One agent's raw GPS trace, timestamps strictly increasing.
struct RawTrajectory {
  std::string agent_id;
  std::vector<GpsPoint> points;
};

/// A contiguous run of stay points between split events (length >= 2).
struct Subtrajectory {
  std::string agent_id;
  std::vector<StayPoint> stays;
};

/// Grid-token rendering of a subtrajectory; the unit the model reconstructs.
struct TokenSequence {
  std::int64_t subtraj_id = 0;
  std::string agent_id;
  std::vector<int> tokens;
  std::int64_t t_start = 0;  // t_arrive of the first stay
  std::int64_t t_end = 0;    // t_depart of the last stay
};

struct PreprocessConfig {
  std::int64_t spd_duration_s = 1'200;      // 20 min dwell threshold
  double spd_radius_m = 200.0;
  std::int64_t long_stay_split_s = 14'400;  // 4 h, rule-1 split
  std::int64_t transition_split_s = 18'000; // 5 h, rule-2 split
  int w_max = 32;
  bool collapse_repeats = true;
};

class EmptyTrajectoryError : public std::runtime_error {
 public:
  explicit EmptyTrajectoryError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Two-pointer stay point detection. From anchor i, find the first fix j
/// leaving the radius; if the time to that exit exceeds the dwell
/// threshold, the fixes [i, j) collapse to one stay point and the anchor
/// jumps to j. A trace that ends inside the radius uses the last fix as
/// the exit time, so a trailing dwell is still emitted. Windows of a
/// single fix are never emitted (a stay needs a strictly positive dwell).
std::vector<StayPoint> detect_stay_points(const RawTrajectory& traj, const PreprocessConfig& cfg);

/// Split a stay sequence into subtrajectories. Rule 1: a stay whose dwell
/// reaches long_stay_split_s ends the current piece and is duplicated as
/// the head of the next one. Rule 2: a transition gap above
/// transition_split_s is a hard cut with no duplication. Pieces shorter
/// than 2 stays are dropped.
std::vector<Subtrajectory> partition(const std::string& agent_id,
                                     const std::vector<StayPoint>& stays,
                                     const PreprocessConfig& cfg);

/// Map stays to grid tokens, optionally collapsing repeat runs, then
/// truncate to w_max. Returns nullopt when fewer than 2 tokens remain.
std::optional<TokenSequence> tokenize(const Subtrajectory& sub, const GridSpec& g,
                                      const PreprocessConfig& cfg);

struct CorpusStats {
  std::int64_t n_agents = 0;           // distinct agents in the input
  std::int64_t n_agents_emitted = 0;   // agents with at least one sequence
  std::int64_t n_train_sequences = 0;
  std::int64_t n_test_sequences = 0;
  int min_len = 0;
  int max_len = 0;
  std::int64_t split_t = 0;            // sequences with t_start < split_t are "train"
  std::vector<std::string> failures;   // per-trajectory errors, non-fatal
};

struct PreprocessResult {
  std::vector<TokenSequence> sequences;
  CorpusStats stats;
};

/// Full pipeline over a corpus. The temporal split boundary is the
/// midpoint of the observed fix time range; per-trajectory failures are
/// collected in stats.failures instead of aborting.
PreprocessResult preprocess_corpus(const std::vector<RawTrajectory>& trajs, const GridSpec& g,
                                   const PreprocessConfig& cfg);

inline bool is_train_sequence(const TokenSequence& s, const CorpusStats& stats) {
  return s.t_start < stats.split_t;
}

}  // namespace trajscope
