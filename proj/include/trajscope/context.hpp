#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajscope/cvae.hpp"
#include "trajscope/poi.hpp"
#include "trajscope/preprocess.hpp"

namespace trajscope {

/// The five ablation columns. Vector dimensionality (d_agent + d_ctx) is
/// identical across modes; disabled slices are structural zeros.
enum class ContextMode {
  kNone,
  kPoiCategories,
  kPoiContextual,
  kAgentId,
  kCombined,
};

class UnknownModeError : public std::runtime_error {
 public:
  explicit UnknownModeError(const std::string& msg) : std::runtime_error(msg) {}
};

ContextMode parse_context_mode(const std::string& name);

/// Canonical report/flag spelling: none, poi_categories, poi_contextual,
/// agent_id, combined (flags accept the kebab-case variants too).
std::string context_mode_name(ContextMode mode);

bool mode_uses_agent(ContextMode mode);
bool mode_uses_poi(ContextMode mode);

/// Turns token sequences into model inputs for one context mode: the
/// agent-id row (0 = UNK for agents unseen in training) and the summed
/// POI context counts of the sequence's cells.
class ContextBuilder {
 public:
  ContextBuilder(ContextMode mode, std::map<std::string, int> agent_rows,
                 const GridPoiVectors* grid_vecs, int n_classes);

  /// Agent table from the training split: rows 1..n in sorted id order.
  static std::map<std::string, int> build_agent_table(const std::vector<TokenSequence>& train);

  ContextMode mode() const { return mode_; }
  int k_poi() const { return k_poi_; }
  int n_agents() const { return static_cast<int>(agent_rows_.size()); }
  const std::map<std::string, int>& agent_rows() const { return agent_rows_; }

  int agent_row(const std::string& agent_id) const;

  SeqExample<double> encode(const TokenSequence& seq) const;

  std::vector<SeqExample<double>> encode_all(const std::vector<TokenSequence>& seqs) const;

 private:
  ContextMode mode_;
  std::map<std::string, int> agent_rows_;
  const GridPoiVectors* grid_vecs_;  // not owned; may be null when unused
  int k_poi_ = 0;
};

}  // namespace trajscope
