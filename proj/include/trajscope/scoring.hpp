#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajscope {

/// Per-subtrajectory anomaly score. score == 1 - recon_loglik exactly;
/// recon_loglik is per-token when length normalization is on.
struct ScoreRecord {
  std::int64_t subtraj_id = 0;
  std::string agent_id;
  double recon_loglik = 0.0;
  double score = 0.0;
};

/// Agent-level result: the maximum score over the agent's records.
struct AgentScore {
  std::string agent_id;
  double score = 0.0;
  std::int64_t argmax_subtraj_id = 0;
  int n_subtrajs = 0;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;
  double average_precision = 0.0;
};

class EmptyInputError : public std::runtime_error {
 public:
  explicit EmptyInputError(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateLabelsError : public std::runtime_error {
 public:
  explicit DegenerateLabelsError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Group records by agent and keep the maximum score. Ties inside an
/// agent resolve to the smallest subtraj_id, so the result does not
/// depend on input order. Output is sorted by agent_id.
std::vector<AgentScore> agent_level(const std::vector<ScoreRecord>& scores);

/// Precision-recall curve over a descending threshold sweep with all
/// equal-scored agents entering together, plus step-interpolated average
/// precision. Throws DegenerateLabelsError unless both classes occur.
PrCurve pr_curve(const std::vector<AgentScore>& agent_scores,
                 const std::map<std::string, int>& labels);

struct AblationRow {
  std::string mode;
  double average_precision = 0.0;
  std::string flag;  // "best", "second" or empty
};

/// Table of AP per context mode with best and second-best flagged.
std::vector<AblationRow> ablation_report(const std::vector<std::pair<std::string, double>>& aps);

}  // namespace trajscope
