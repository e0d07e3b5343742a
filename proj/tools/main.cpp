#include <CLI11.hpp>
#include <json.hpp>

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "trajscope/context.hpp"
#include "trajscope/experiment.hpp"
#include "trajscope/io.hpp"
#include "trajscope/log.hpp"
#include "trajscope/simulate.hpp"
#include "trajscope/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajscope;

namespace {

void write_artifact(const std::string& out_dir, const std::string& name,
                    const std::string& bytes) {
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / name).string();
  atomic_write_file(path, bytes);
  log_debug("wrote ", path, " (", bytes.size(), " bytes)");
}

void print_summary(const json& j) { std::cout << j.dump() << std::endl; }

void add_hyper_options(CLI::App* cmd, HyperParams& hp) {
  cmd->add_option("--d-tok", hp.d_tok, "token embedding dim");
  cmd->add_option("--d-agent", hp.d_agent, "agent embedding dim");
  cmd->add_option("--d-ctx", hp.d_ctx, "projected POI context dim");
  cmd->add_option("--d-hid", hp.d_hid, "recurrent hidden dim");
  cmd->add_option("--d-z", hp.d_z, "latent dim");
  cmd->add_option("--mc-samples", hp.mc_samples, "Monte Carlo draws per score");
  cmd->add_option("--lr", hp.lr, "Adam learning rate");
  cmd->add_option("--epochs", hp.epochs, "training epochs");
  cmd->add_option("--batch-size", hp.batch_size, "training batch size");
  cmd->add_option("--w-max", hp.w_max, "maximum sequence length");
  cmd->add_option("--seed", hp.seed, "random seed");
  cmd->add_flag("--length-normalize,!--no-length-normalize", hp.length_normalize,
                "per-token reconstruction log-likelihood");
}

std::vector<TokenSequence> select_split(std::vector<TokenSequence> seqs,
                                        const CorpusStats& stats, const std::string& split) {
  if (split == "all") return seqs;
  std::vector<TokenSequence> out;
  for (TokenSequence& s : seqs) {
    const bool train = is_train_sequence(s, stats);
    if ((split == "train") == train) out.push_back(std::move(s));
  }
  return out;
}

/// Rebuild the context builder a checkpoint was trained with.
ContextBuilder builder_from_checkpoint(const Checkpoint& ck, const GridPoiVectors* gv,
                                       int n_classes) {
  const ContextMode mode = parse_context_mode(ck.context_mode);
  if (mode_uses_poi(mode)) {
    if (gv == nullptr) {
      throw std::invalid_argument("checkpoint mode '" + ck.context_mode +
                                  "' requires --grid-vectors");
    }
    if (n_classes != ck.k_poi) {
      throw std::invalid_argument("grid vectors have " + std::to_string(n_classes) +
                                  " classes but the checkpoint was trained with " +
                                  std::to_string(ck.k_poi));
    }
  }
  return ContextBuilder(mode, ck.agent_rows, mode_uses_poi(mode) ? gv : nullptr, n_classes);
}

int run(int argc, char** argv) {
  CLI::App app{"trajscope: context-aware detection of anomalous agents in GPS trajectories"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override file values");

  // --- simulate ---------------------------------------------------------
  auto* c_sim = app.add_subcommand("simulate", "generate a synthetic labeled city dataset");
  SimConfig sim;
  std::string sim_out = "out";
  c_sim->add_option("--seed", sim.seed, "random seed");
  c_sim->add_option("--n-agents", sim.n_agents, "number of agents")->check(CLI::PositiveNumber);
  c_sim->add_option("--n-days", sim.n_days, "number of simulated days")
      ->check(CLI::PositiveNumber);
  c_sim->add_option("--n-pois", sim.n_pois, "number of POIs")->check(CLI::NonNegativeNumber);
  c_sim->add_option("--anomaly-rate", sim.anomaly_rate, "fraction of anomalous agents")
      ->check(CLI::Range(0.0, 1.0));
  c_sim->add_option("--w-agent-atypical", sim.w_agent_atypical, "agent-atypical kind weight");
  c_sim->add_option("--w-spatial-atypical", sim.w_spatial_atypical,
                    "spatial-atypical kind weight");
  c_sim->add_option("--anomalous-days", sim.anomalous_days_per_agent,
                    "injected days per anomalous agent");
  c_sim->add_option("--fix-interval-s", sim.fix_interval_s, "GPS fix period while moving");
  c_sim->add_option("--dwell-fix-interval-s", sim.dwell_fix_interval_s,
                    "GPS fix period while stationary");
  c_sim->add_option("--gps-noise-m", sim.gps_noise_m, "stddev of positional jitter");
  c_sim->add_option("--grid-origin-lat", sim.grid.origin_lat, "grid southwest corner latitude");
  c_sim->add_option("--grid-origin-lon", sim.grid.origin_lon, "grid southwest corner longitude");
  c_sim->add_option("--grid-cell-size-m", sim.grid.cell_size_m, "grid cell size in meters");
  c_sim->add_option("--grid-rows", sim.grid.n_rows, "grid rows");
  c_sim->add_option("--grid-cols", sim.grid.n_cols, "grid columns");
  c_sim->add_option("--t0", sim.t0, "epoch seconds of day 0");
  c_sim->add_option("--out", sim_out, "output directory");
  c_sim->callback([&] {
    const SimOutput out = simulate(sim);
    write_artifact(sim_out, "trajectories.jsonl", trajectories_to_jsonl(out.trajectories));
    write_artifact(sim_out, "pois.csv", pois_to_csv(out.city.pois));
    write_artifact(sim_out, "labels.csv", labels_to_csv(out.truth.agent_labels));
    write_artifact(sim_out, "grid.json", grid_to_json(sim.grid));
    write_artifact(sim_out, "truth.json", truth_to_json(out.truth));
    std::size_t n_fixes = 0;
    for (const auto& tr : out.trajectories) n_fixes += tr.points.size();
    int n_anom = 0;
    for (const auto& [id, l] : out.truth.agent_labels) n_anom += l;
    print_summary(json{{"command", "simulate"},
                       {"out", sim_out},
                       {"n_agents", sim.n_agents},
                       {"n_days", sim.n_days},
                       {"n_pois", out.city.pois.size()},
                       {"n_fixes", n_fixes},
                       {"n_anomalous_agents", n_anom},
                       {"n_injected_windows", out.truth.injected_windows.size()}});
  });

  // --- preprocess -------------------------------------------------------
  auto* c_pre = app.add_subcommand("preprocess", "raw fixes -> grid-token sequences");
  std::string pre_traj, pre_grid, pre_out = "out";
  PreprocessConfig prep;
  c_pre->add_option("--trajectories", pre_traj, "input trajectory JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_pre->add_option("--grid", pre_grid, "grid spec JSON")->required()->check(CLI::ExistingFile);
  c_pre->add_option("--spd-duration-s", prep.spd_duration_s, "stay dwell threshold");
  c_pre->add_option("--spd-radius-m", prep.spd_radius_m, "stay radius");
  c_pre->add_option("--long-stay-split-s", prep.long_stay_split_s, "rule-1 dwell split");
  c_pre->add_option("--transition-split-s", prep.transition_split_s, "rule-2 gap split");
  c_pre->add_option("--w-max", prep.w_max, "maximum tokens per sequence");
  c_pre->add_flag("--collapse-repeats,!--no-collapse-repeats", prep.collapse_repeats,
                  "collapse runs of identical tokens");
  c_pre->add_option("--out", pre_out, "output directory");
  c_pre->callback([&] {
    const GridSpec grid = grid_from_json(read_file(pre_grid));
    const auto trajs = trajectories_from_jsonl(read_file(pre_traj), pre_traj);
    const PreprocessResult res = preprocess_corpus(trajs, grid, prep);
    write_artifact(pre_out, "sequences.jsonl", sequences_to_jsonl(res.sequences));
    write_artifact(pre_out, "meta.json", meta_to_json(grid, prep, res.stats));
    for (const std::string& f : res.stats.failures) log_error("trajectory skipped: ", f);
    print_summary(json{{"command", "preprocess"},
                       {"out", pre_out},
                       {"n_agents", res.stats.n_agents},
                       {"n_train_sequences", res.stats.n_train_sequences},
                       {"n_test_sequences", res.stats.n_test_sequences},
                       {"min_len", res.stats.min_len},
                       {"max_len", res.stats.max_len},
                       {"split_t", res.stats.split_t},
                       {"n_failures", res.stats.failures.size()}});
  });

  // --- embed-poi ---------------------------------------------------------
  auto* c_poi = app.add_subcommand("embed-poi",
                                   "POI contextual embeddings, clusters and grid count vectors");
  std::string poi_csv, poi_grid, poi_out = "out";
  double poi_radius = 500.0;
  int poi_k = 16;
  std::uint64_t poi_seed = 42;
  c_poi->add_option("--pois", poi_csv, "POI CSV")->required()->check(CLI::ExistingFile);
  c_poi->add_option("--grid", poi_grid, "grid spec JSON")->required()->check(CLI::ExistingFile);
  c_poi->add_option("--radius-m", poi_radius, "neighborhood radius");
  c_poi->add_option("--clusters", poi_k, "number of contextual categories")
      ->check(CLI::Range(2, 1 << 20));
  c_poi->add_option("--seed", poi_seed, "clustering seed");
  c_poi->add_option("--out", poi_out, "output directory");
  c_poi->callback([&] {
    const GridSpec grid = grid_from_json(read_file(poi_grid));
    const auto pois = pois_from_csv(read_file(poi_csv), poi_csv);
    const auto categories = category_table(pois);
    const Eigen::MatrixXd embs = embed_all_pois(pois, categories, poi_radius);
    const ClusterModel model = fit_clusters(embs, poi_k, poi_seed);
    const GridVectorsResult ctx_vecs = grid_cluster_vectors(pois, embs, model, grid);
    const GridVectorsResult cat_vecs = baseline_category_vectors(pois, categories, grid);
    write_artifact(poi_out, "cluster_model.json", cluster_model_to_json(model));
    write_artifact(poi_out, "grid_vectors.jsonl", grid_vectors_to_jsonl(ctx_vecs.vectors));
    write_artifact(poi_out, "grid_vectors_categories.jsonl",
                   grid_vectors_to_jsonl(cat_vecs.vectors));
    write_artifact(poi_out, "cluster_report.csv",
                   cluster_report_to_csv(dominant_class_report(ctx_vecs.vectors)));
    print_summary(json{{"command", "embed-poi"},
                       {"out", poi_out},
                       {"n_pois", pois.size()},
                       {"n_categories", categories.size()},
                       {"clusters", poi_k},
                       {"cells_with_pois", ctx_vecs.vectors.size()},
                       {"skipped_out_of_bounds", ctx_vecs.skipped_out_of_bounds}});
  });

  // --- train --------------------------------------------------------------
  auto* c_train = app.add_subcommand("train", "train the conditional VAE on the training half");
  std::string tr_seqs, tr_meta, tr_gv, tr_mode = "none", tr_out = "out";
  HyperParams tr_hp;
  c_train->add_option("--sequences", tr_seqs, "token sequence JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_train->add_option("--meta", tr_meta, "dataset metadata JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_train->add_option("--grid-vectors", tr_gv, "grid POI vectors JSONL (POI modes)")
      ->check(CLI::ExistingFile);
  c_train->add_option("--mode", tr_mode, "context mode")
      ->check(CLI::IsMember({"none", "poi-categories", "poi-contextual", "agent-id", "combined"}));
  add_hyper_options(c_train, tr_hp);
  c_train->add_option("--out", tr_out, "output directory");
  c_train->callback([&] {
    GridSpec grid;
    PreprocessConfig pcfg;
    CorpusStats stats;
    meta_from_json(read_file(tr_meta), grid, pcfg, stats);
    const auto seqs = sequences_from_jsonl(read_file(tr_seqs), tr_seqs);
    const auto train_seqs = select_split(seqs, stats, "train");
    if (train_seqs.empty()) throw std::invalid_argument("training split is empty");

    const ContextMode mode = parse_context_mode(tr_mode);
    GridPoiVectors gv;
    int n_classes = 0;
    if (mode_uses_poi(mode)) {
      if (tr_gv.empty()) {
        throw std::invalid_argument("--grid-vectors is required for mode " + tr_mode);
      }
      gv = grid_vectors_from_jsonl(read_file(tr_gv), tr_gv, n_classes);
    }
    const auto agent_rows = ContextBuilder::build_agent_table(train_seqs);
    const ContextBuilder ctx(mode, agent_rows, mode_uses_poi(mode) ? &gv : nullptr, n_classes);
    const TrainResult res =
        train(ctx.encode_all(train_seqs), tr_hp, grid.vocab_size(), ctx.n_agents(), ctx.k_poi());

    Checkpoint ck;
    ck.hp = tr_hp;
    ck.vocab = grid.vocab_size();
    ck.k_poi = ctx.k_poi();
    ck.context_mode = context_mode_name(mode);
    ck.agent_rows = agent_rows;
    ck.params = res.params;
    write_artifact(tr_out, "checkpoint.bin", checkpoint_to_bytes(ck));
    std::string trace = "epoch,loss\n";
    for (std::size_t e = 0; e < res.epoch_losses.size(); ++e) {
      trace += std::to_string(e) + "," + format_double(res.epoch_losses[e]) + "\n";
    }
    write_artifact(tr_out, "loss_trace.csv", trace);
    print_summary(json{{"command", "train"},
                       {"out", tr_out},
                       {"mode", context_mode_name(mode)},
                       {"n_train_sequences", train_seqs.size()},
                       {"n_agents", ctx.n_agents()},
                       {"epochs", tr_hp.epochs},
                       {"final_loss", res.epoch_losses.empty() ? 0.0 : res.epoch_losses.back()}});
  });

  // --- score ---------------------------------------------------------------
  auto* c_score = app.add_subcommand("score", "score sequences against a trained checkpoint");
  std::string sc_ck, sc_seqs, sc_meta, sc_gv, sc_split = "test", sc_out = "out";
  int sc_threads = 1;
  std::uint64_t sc_seed = 0;
  c_score->add_option("--checkpoint", sc_ck, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  c_score->add_option("--sequences", sc_seqs, "token sequence JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_score->add_option("--meta", sc_meta, "dataset metadata JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_score->add_option("--grid-vectors", sc_gv, "grid POI vectors JSONL (POI modes)")
      ->check(CLI::ExistingFile);
  c_score->add_option("--split", sc_split, "which temporal split to score")
      ->check(CLI::IsMember({"train", "test", "all"}));
  c_score->add_option("--threads", sc_threads, "scoring threads")->check(CLI::PositiveNumber);
  auto* sc_seed_opt =
      c_score->add_option("--seed", sc_seed, "Monte Carlo seed (default: checkpoint seed)");
  c_score->add_option("--out", sc_out, "output directory");
  c_score->callback([&] {
    const Checkpoint ck = checkpoint_from_bytes(read_file(sc_ck));
    GridSpec grid;
    PreprocessConfig pcfg;
    CorpusStats stats;
    meta_from_json(read_file(sc_meta), grid, pcfg, stats);
    const auto seqs = sequences_from_jsonl(read_file(sc_seqs), sc_seqs);
    const auto chosen = select_split(seqs, stats, sc_split);

    GridPoiVectors gv;
    int n_classes = 0;
    if (!sc_gv.empty()) gv = grid_vectors_from_jsonl(read_file(sc_gv), sc_gv, n_classes);
    const ContextBuilder ctx =
        builder_from_checkpoint(ck, sc_gv.empty() ? nullptr : &gv, n_classes);
    const std::uint64_t seed = sc_seed_opt->count() > 0 ? sc_seed : ck.hp.seed;
    const auto scores = score_corpus(chosen, ctx, ck.params, ck.hp, seed, sc_threads);
    write_artifact(sc_out, "scores.csv", scores_to_csv(scores));
    print_summary(json{{"command", "score"},
                       {"out", sc_out},
                       {"mode", ck.context_mode},
                       {"split", sc_split},
                       {"n_scored", scores.size()},
                       {"seed", seed}});
  });

  // --- evaluate --------------------------------------------------------------
  auto* c_eval = app.add_subcommand("evaluate", "agent-level PR curve from sequence scores");
  std::string ev_scores, ev_labels, ev_out = "out";
  c_eval->add_option("--scores", ev_scores, "scores CSV")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--labels", ev_labels, "labels CSV")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", ev_out, "output directory");
  c_eval->callback([&] {
    const auto scores = scores_from_csv(read_file(ev_scores), ev_scores);
    const auto labels = labels_from_csv(read_file(ev_labels), ev_labels);
    const auto agents = agent_level(scores);
    const PrCurve pr = pr_curve(agents, labels);
    write_artifact(ev_out, "pr_curve.json", pr_curve_to_json(pr));
    print_summary(json{{"command", "evaluate"},
                       {"out", ev_out},
                       {"n_agents", agents.size()},
                       {"n_points", pr.points.size()},
                       {"average_precision", pr.average_precision}});
  });

  // --- ablation ----------------------------------------------------------------
  auto* c_abl =
      app.add_subcommand("ablation", "train and evaluate all five context modes on one dataset");
  std::string ab_seqs, ab_meta, ab_gv, ab_gvc, ab_labels, ab_out = "out";
  HyperParams ab_hp;
  int ab_threads = 1;
  c_abl->add_option("--sequences", ab_seqs, "token sequence JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_abl->add_option("--meta", ab_meta, "dataset metadata JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_abl->add_option("--grid-vectors", ab_gv, "clustered grid POI vectors JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_abl->add_option("--grid-vectors-categories", ab_gvc, "raw-category grid vectors JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  c_abl->add_option("--labels", ab_labels, "labels CSV")->required()->check(CLI::ExistingFile);
  add_hyper_options(c_abl, ab_hp);
  c_abl->add_option("--threads", ab_threads, "scoring threads")->check(CLI::PositiveNumber);
  c_abl->add_option("--out", ab_out, "output directory");
  c_abl->callback([&] {
    GridSpec grid;
    PreprocessConfig pcfg;
    CorpusStats stats;
    meta_from_json(read_file(ab_meta), grid, pcfg, stats);
    const auto seqs = sequences_from_jsonl(read_file(ab_seqs), ab_seqs);
    std::vector<TokenSequence> train_seqs, test_seqs;
    for (const TokenSequence& s : seqs) {
      (is_train_sequence(s, stats) ? train_seqs : test_seqs).push_back(s);
    }
    int n_ctx = 0, n_cat = 0;
    const GridPoiVectors gv_ctx = grid_vectors_from_jsonl(read_file(ab_gv), ab_gv, n_ctx);
    const GridPoiVectors gv_cat = grid_vectors_from_jsonl(read_file(ab_gvc), ab_gvc, n_cat);
    const auto labels = labels_from_csv(read_file(ab_labels), ab_labels);

    const std::vector<ContextMode> modes = {ContextMode::kNone, ContextMode::kPoiCategories,
                                            ContextMode::kPoiContextual, ContextMode::kAgentId,
                                            ContextMode::kCombined};
    std::vector<std::pair<std::string, double>> aps;
    json per_mode = json::object();
    int failures = 0;
    for (ContextMode mode : modes) {
      const std::string name = context_mode_name(mode);
      try {
        ModeRunInput in;
        in.mode = mode;
        in.vocab = grid.vocab_size();
        in.train = &train_seqs;
        in.test = &test_seqs;
        if (mode == ContextMode::kPoiCategories) {
          in.grid_vecs = &gv_cat;
          in.n_classes = n_cat;
        } else if (mode == ContextMode::kPoiContextual || mode == ContextMode::kCombined) {
          in.grid_vecs = &gv_ctx;
          in.n_classes = n_ctx;
        }
        in.labels = &labels;
        in.hp = ab_hp;
        in.score_threads = ab_threads;
        const ModeRunResult res = run_mode(in);
        write_artifact(ab_out, "checkpoint_" + name + ".bin",
                       checkpoint_to_bytes(res.checkpoint));
        write_artifact(ab_out, "scores_" + name + ".csv", scores_to_csv(res.scores));
        write_artifact(ab_out, "pr_" + name + ".json", pr_curve_to_json(*res.pr));
        aps.emplace_back(name, res.pr->average_precision);
        per_mode[name] = res.pr->average_precision;
        log_info("mode ", name, ": AP = ", res.pr->average_precision);
      } catch (const std::exception& e) {
        ++failures;
        log_error("mode ", name, " failed: ", e.what());
      }
    }
    write_artifact(ab_out, "ablation.csv", ablation_to_csv(ablation_report(aps)));
    print_summary(json{{"command", "ablation"},
                       {"out", ab_out},
                       {"average_precision", per_mode},
                       {"n_failed_modes", failures}});
    if (failures > 0) {
      throw std::runtime_error(std::to_string(failures) + " ablation mode(s) failed");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const NonFiniteLossError& e) {
    log_error(e.what());
    return 2;
  } catch (const ParseError& e) {
    log_error(e.what());
    return 1;
  } catch (const OutOfBoundsError& e) {
    log_error(e.what());
    return 1;
  } catch (const EmptyTrajectoryError& e) {
    log_error(e.what());
    return 1;
  } catch (const TooFewPointsError& e) {
    log_error(e.what());
    return 1;
  } catch (const UnknownModeError& e) {
    log_error(e.what());
    return 1;
  } catch (const ConfigError& e) {
    log_error(e.what());
    return 1;
  } catch (const DegenerateLabelsError& e) {
    log_error(e.what());
    return 1;
  } catch (const EmptyInputError& e) {
    log_error(e.what());
    return 1;
  } catch (const ShapeMismatchError& e) {
    log_error(e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    log_error(e.what());
    return 1;
  } catch (const std::exception& e) {
    log_error("runtime failure: ", e.what());
    return 2;
  }
}
