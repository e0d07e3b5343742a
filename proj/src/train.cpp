#include "trajscope/train.hpp"

#include <cmath>
#include <sstream>
#include <thread>

#include "trajscope/adam.hpp"
#include "trajscope/rng.hpp"

namespace trajscope {

TrainResult train(const std::vector<SeqExample<double>>& dataset, const HyperParams& hp,
                  int vocab, int n_agents, int k_poi) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const SeqExample<double>& ex : dataset) {
    const int w = static_cast<int>(ex.tokens.size());
    if (w < 2 || w > hp.w_max) {
      throw ShapeMismatchError("train: sequence length " + std::to_string(w) +
                               " outside [2, " + std::to_string(hp.w_max) + "]");
    }
  }

  TrainResult res;
  res.params = init_params<double>(hp, vocab, n_agents, k_poi, hp.seed);
  Adam<double> opt(res.params, hp.lr);
  Rng shuffle_rng = Rng::stream(hp.seed, 0x73687566ull);  // "shuf"
  Rng noise_rng = Rng::stream(hp.seed, 0x656c626full);    // "elbo"

  std::vector<int> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  const int n = static_cast<int>(dataset.size());
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += hp.batch_size) {
      const int stop = std::min(n, start + hp.batch_size);
      std::vector<SeqExample<double>> batch;
      batch.reserve(static_cast<std::size_t>(stop - start));
      for (int i = start; i < stop; ++i) {
        batch.push_back(dataset[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
      }
      ModelParams<double> grads = zeros_like(res.params);
      const double loss = elbo_loss(batch, res.params, hp, noise_rng, &grads);
      if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "non-finite loss " << loss << " at epoch " << epoch << ", batch starting at "
           << start;
        throw NonFiniteLossError(os.str());
      }
      opt.step(res.params, grads);
      epoch_loss += loss * static_cast<double>(stop - start);
    }
    res.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return res;
}

std::vector<ScoreRecord> score_corpus(const std::vector<TokenSequence>& seqs,
                                      const ContextBuilder& ctx,
                                      const ModelParams<double>& params, const HyperParams& hp,
                                      std::uint64_t score_seed, int n_threads) {
  std::vector<ScoreRecord> out(seqs.size());
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const TokenSequence& s = seqs[i];
      const SeqExample<double> ex = ctx.encode(s);
      const ContextVector<double> c = make_context(params, ex.agent_row, ex.poi);
      Rng rng = Rng::stream(score_seed, static_cast<std::uint64_t>(s.subtraj_id));
      out[i] = anomaly_score(s.subtraj_id, s.agent_id, s.tokens, c, params, hp.mc_samples, rng,
                             hp.length_normalize);
    }
  };
  if (n_threads <= 1 || seqs.size() < 2) {
    worker(0, seqs.size());
    return out;
  }
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(n_threads), seqs.size());
  std::vector<std::thread> threads;
  const std::size_t chunk = (seqs.size() + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(seqs.size(), begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(worker, begin, end);
  }
  for (auto& th : threads) th.join();
  return out;
}

}  // namespace trajscope
