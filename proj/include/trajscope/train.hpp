#pragma once

#include <cstdint>
#include <vector>

#include "trajscope/context.hpp"
#include "trajscope/cvae.hpp"
#include "trajscope/preprocess.hpp"
#include "trajscope/scoring.hpp"

namespace trajscope {

struct TrainResult {
  ModelParams<double> params;
  std::vector<double> epoch_losses;  // mean per-sequence loss per epoch
};

/// Adam-train the conditional VAE on encoded sequences. Epoch shuffling,
/// initialization and latent noise all derive from hp.seed; identical
/// inputs give bit-identical parameters.
TrainResult train(const std::vector<SeqExample<double>>& dataset, const HyperParams& hp,
                  int vocab, int n_agents, int k_poi);

/// Score a set of sequences against a frozen model. Each sequence's
/// Monte Carlo noise comes from its own (seed, subtraj_id) substream, so
/// results are independent of ordering and of n_threads. Output is in
/// input order.
std::vector<ScoreRecord> score_corpus(const std::vector<TokenSequence>& seqs,
                                      const ContextBuilder& ctx,
                                      const ModelParams<double>& params, const HyperParams& hp,
                                      std::uint64_t score_seed, int n_threads = 1);

}  // namespace trajscope
