#include "trajscope/context.hpp"

namespace trajscope {

ContextMode parse_context_mode(const std::string& name) {
  if (name == "none") return ContextMode::kNone;
  if (name == "poi-categories" || name == "poi_categories") return ContextMode::kPoiCategories;
  if (name == "poi-contextual" || name == "poi_contextual") return ContextMode::kPoiContextual;
  if (name == "agent-id" || name == "agent_id") return ContextMode::kAgentId;
  if (name == "combined" || name == "poi-contextual+agent-id") return ContextMode::kCombined;
  throw UnknownModeError("unknown context mode '" + name + "'");
}

std::string context_mode_name(ContextMode mode) {
  switch (mode) {
    case ContextMode::kNone: return "none";
    case ContextMode::kPoiCategories: return "poi_categories";
    case ContextMode::kPoiContextual: return "poi_contextual";
    case ContextMode::kAgentId: return "agent_id";
    case ContextMode::kCombined: return "combined";
  }
  throw UnknownModeError("invalid context mode value");
}

bool mode_uses_agent(ContextMode mode) {
  return mode == ContextMode::kAgentId || mode == ContextMode::kCombined;
}

bool mode_uses_poi(ContextMode mode) {
  return mode == ContextMode::kPoiCategories || mode == ContextMode::kPoiContextual ||
         mode == ContextMode::kCombined;
}

ContextBuilder::ContextBuilder(ContextMode mode, std::map<std::string, int> agent_rows,
                               const GridPoiVectors* grid_vecs, int n_classes)
    : mode_(mode), agent_rows_(std::move(agent_rows)), grid_vecs_(grid_vecs) {
  if (mode_uses_poi(mode_)) {
    if (grid_vecs == nullptr) {
      throw std::invalid_argument("context mode '" + context_mode_name(mode) +
                                  "' needs grid POI vectors");
    }
    k_poi_ = n_classes;
  }
}

std::map<std::string, int> ContextBuilder::build_agent_table(
    const std::vector<TokenSequence>& train) {
  std::map<std::string, int> rows;
  for (const TokenSequence& s : train) rows.emplace(s.agent_id, 0);
  int next = 1;  // row 0 is UNK
  for (auto& [id, row] : rows) row = next++;
  return rows;
}

int ContextBuilder::agent_row(const std::string& agent_id) const {
  const auto it = agent_rows_.find(agent_id);
  return it == agent_rows_.end() ? 0 : it->second;
}

SeqExample<double> ContextBuilder::encode(const TokenSequence& seq) const {
  SeqExample<double> ex;
  ex.tokens = seq.tokens;
  ex.agent_row = mode_uses_agent(mode_) ? agent_row(seq.agent_id) : -1;
  if (mode_uses_poi(mode_)) {
    ex.poi = subtraj_context(seq.tokens, *grid_vecs_, k_poi_);
  }
  return ex;
}

std::vector<SeqExample<double>> ContextBuilder::encode_all(
    const std::vector<TokenSequence>& seqs) const {
  std::vector<SeqExample<double>> out;
  out.reserve(seqs.size());
  for (const TokenSequence& s : seqs) out.push_back(encode(s));
  return out;
}

}  // namespace trajscope
