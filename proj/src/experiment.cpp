#include "trajscope/experiment.hpp"

#include <algorithm>
#include <stdexcept>

namespace trajscope {

ModeRunResult run_mode(const ModeRunInput& in) {
  if (in.train == nullptr || in.test == nullptr) {
    throw std::invalid_argument("run_mode: train/test sequences required");
  }
  if (in.vocab <= 0) throw std::invalid_argument("run_mode: vocab must be positive");
  ModeRunResult out;
  out.mode = in.mode;

  auto agent_rows = ContextBuilder::build_agent_table(*in.train);
  const ContextBuilder ctx(in.mode, agent_rows,
                           mode_uses_poi(in.mode) ? in.grid_vecs : nullptr, in.n_classes);

  const TrainResult tr =
      train(ctx.encode_all(*in.train), in.hp, in.vocab, ctx.n_agents(), ctx.k_poi());
  out.epoch_losses = tr.epoch_losses;

  out.scores = score_corpus(*in.test, ctx, tr.params, in.hp, in.hp.seed, in.score_threads);

  out.checkpoint.hp = in.hp;
  out.checkpoint.vocab = in.vocab;
  out.checkpoint.k_poi = ctx.k_poi();
  out.checkpoint.context_mode = context_mode_name(in.mode);
  out.checkpoint.agent_rows = agent_rows;
  out.checkpoint.params = tr.params;

  if (in.labels != nullptr && !in.labels->empty()) {
    out.pr = pr_curve(agent_level(out.scores), *in.labels);
  }
  return out;
}

double ExperimentResult::ap(ContextMode mode) const {
  for (const ModeRunResult& r : mode_results) {
    if (r.mode == mode && r.pr.has_value()) return r.pr->average_precision;
  }
  throw std::invalid_argument("no AP recorded for mode " + context_mode_name(mode));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult out;
  const SimOutput sim = simulate(cfg.sim);
  const PreprocessResult pre = preprocess_corpus(sim.trajectories, cfg.sim.grid, cfg.prep);
  out.stats = pre.stats;
  out.truth = sim.truth;

  std::vector<TokenSequence> train_seqs, test_seqs;
  for (const TokenSequence& s : pre.sequences) {
    (is_train_sequence(s, pre.stats) ? train_seqs : test_seqs).push_back(s);
  }

  const auto categories = category_table(sim.city.pois);
  GridVectorsResult cat_vecs, ctx_vecs;
  const bool needs_cat = std::count(cfg.modes.begin(), cfg.modes.end(),
                                    ContextMode::kPoiCategories) > 0;
  const bool needs_ctx =
      std::count(cfg.modes.begin(), cfg.modes.end(), ContextMode::kPoiContextual) > 0 ||
      std::count(cfg.modes.begin(), cfg.modes.end(), ContextMode::kCombined) > 0;
  if (needs_cat) {
    cat_vecs = baseline_category_vectors(sim.city.pois, categories, cfg.sim.grid);
  }
  if (needs_ctx) {
    const Eigen::MatrixXd embs = embed_all_pois(sim.city.pois, categories, cfg.poi_radius_m);
    const ClusterModel model = fit_clusters(embs, cfg.n_clusters, cfg.hp.seed);
    ctx_vecs = grid_cluster_vectors(sim.city.pois, embs, model, cfg.sim.grid);
  }

  std::vector<std::pair<std::string, double>> aps;
  for (ContextMode mode : cfg.modes) {
    ModeRunInput in;
    in.mode = mode;
    in.vocab = cfg.sim.grid.vocab_size();
    in.train = &train_seqs;
    in.test = &test_seqs;
    if (mode == ContextMode::kPoiCategories) {
      in.grid_vecs = &cat_vecs.vectors;
      in.n_classes = cat_vecs.n_classes;
    } else if (mode == ContextMode::kPoiContextual || mode == ContextMode::kCombined) {
      in.grid_vecs = &ctx_vecs.vectors;
      in.n_classes = ctx_vecs.n_classes;
    }
    in.labels = &sim.truth.agent_labels;
    in.hp = cfg.hp;
    in.score_threads = cfg.score_threads;
    out.mode_results.push_back(run_mode(in));
    aps.emplace_back(context_mode_name(mode),
                     out.mode_results.back().pr ? out.mode_results.back().pr->average_precision
                                                : 0.0);
  }
  out.ablation_csv = ablation_to_csv(ablation_report(aps));
  return out;
}

}  // namespace trajscope
