#include "trajscope/scoring.hpp"

#include <algorithm>

namespace trajscope {

std::vector<AgentScore> agent_level(const std::vector<ScoreRecord>& scores) {
  if (scores.empty()) throw EmptyInputError("agent_level: no score records");
  std::map<std::string, AgentScore> by_agent;
  for (const ScoreRecord& r : scores) {
    auto [it, inserted] = by_agent.try_emplace(r.agent_id);
    AgentScore& a = it->second;
    if (inserted) {
      a.agent_id = r.agent_id;
      a.score = r.score;
      a.argmax_subtraj_id = r.subtraj_id;
      a.n_subtrajs = 1;
      continue;
    }
    ++a.n_subtrajs;
    if (r.score > a.score || (r.score == a.score && r.subtraj_id < a.argmax_subtraj_id)) {
      a.score = r.score;
      a.argmax_subtraj_id = r.subtraj_id;
    }
  }
  std::vector<AgentScore> out;
  out.reserve(by_agent.size());
  for (auto& [id, a] : by_agent) out.push_back(std::move(a));
  return out;
}

PrCurve pr_curve(const std::vector<AgentScore>& agent_scores,
                 const std::map<std::string, int>& labels) {
  std::int64_t pos = 0, neg = 0;
  std::vector<std::pair<double, int>> ranked;  // (score, label)
  ranked.reserve(agent_scores.size());
  for (const AgentScore& a : agent_scores) {
    const auto it = labels.find(a.agent_id);
    if (it == labels.end()) {
      throw std::invalid_argument("pr_curve: no label for agent '" + a.agent_id + "'");
    }
    ranked.emplace_back(a.score, it->second);
    (it->second ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) {
    throw DegenerateLabelsError("pr_curve: labels must contain both classes (pos=" +
                                std::to_string(pos) + ", neg=" + std::to_string(neg) + ")");
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  PrCurve curve;
  std::int64_t tp = 0, fp = 0;
  double prev_recall = 0.0;
  std::size_t i = 0;
  while (i < ranked.size()) {
    std::size_t j = i;
    while (j < ranked.size() && ranked[j].first == ranked[i].first) {
      (ranked[j].second ? tp : fp) += 1;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    curve.points.push_back(PrPoint{recall, precision});
    curve.average_precision += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return curve;
}

std::vector<AblationRow> ablation_report(const std::vector<std::pair<std::string, double>>& aps) {
  std::vector<AblationRow> rows;
  rows.reserve(aps.size());
  for (const auto& [mode, ap] : aps) rows.push_back(AblationRow{mode, ap, ""});
  // Flag best and second-best; ties resolve to the earlier row.
  int best = -1, second = -1;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    if (best < 0 || rows[static_cast<std::size_t>(i)].average_precision >
                        rows[static_cast<std::size_t>(best)].average_precision) {
      second = best;
      best = i;
    } else if (second < 0 || rows[static_cast<std::size_t>(i)].average_precision >
                                 rows[static_cast<std::size_t>(second)].average_precision) {
      second = i;
    }
  }
  if (best >= 0) rows[static_cast<std::size_t>(best)].flag = "best";
  if (second >= 0) rows[static_cast<std::size_t>(second)].flag = "second";
  return rows;
}

}  // namespace trajscope
