#include <doctest.h>

#include <filesystem>

#include "trajscope/io.hpp"
#include "trajscope/rng.hpp"

using namespace trajscope;

TEST_CASE("doubles render shortest round-trip") {
  for (double v : {0.1, -3.25, 1.0 / 3.0, 111194.92664455873, 0.0, -0.0, 1e-300}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("grid spec JSON round trip and validation") {
  GridSpec g{44.85, -93.35, 500.0, 24, 24};
  const GridSpec back = grid_from_json(grid_to_json(g));
  CHECK(back.origin_lat == g.origin_lat);
  CHECK(back.origin_lon == g.origin_lon);
  CHECK(back.cell_size_m == g.cell_size_m);
  CHECK(back.n_rows == g.n_rows);
  CHECK(back.n_cols == g.n_cols);
  CHECK_THROWS_AS(grid_from_json("{\"origin_lat\": 1}"), ParseError);
  CHECK_THROWS_AS(
      grid_from_json(
          R"({"origin_lat":0,"origin_lon":0,"cell_size_m":-5,"n_rows":2,"n_cols":2})"),
      ParseError);
}

TEST_CASE("trajectory JSONL round trip enforces ordering and names bad lines") {
  std::vector<RawTrajectory> trajs;
  trajs.push_back(RawTrajectory{"a", {GpsPoint{1.0, 2.0, 10}, GpsPoint{1.5, 2.5, 20}}});
  trajs.push_back(RawTrajectory{"b", {GpsPoint{-1.0, -2.0, 5}}});
  const std::string text = trajectories_to_jsonl(trajs);
  const auto back = trajectories_from_jsonl(text, "t.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].agent_id == "a");
  CHECK(back[0].points.size() == 2);
  CHECK(back[0].points[1].lat == 1.5);
  CHECK(back[1].points[0].t == 5);

  SUBCASE("malformed record names the line") {
    try {
      trajectories_from_jsonl("{\"agent_id\":\"a\",\"lat\":1,\"lon\":2,\"t\":3}\nnot json\n",
                              "bad.jsonl");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
    }
  }
  SUBCASE("agent order violations are rejected") {
    const std::string unsorted =
        "{\"agent_id\":\"b\",\"lat\":1,\"lon\":2,\"t\":3}\n"
        "{\"agent_id\":\"a\",\"lat\":1,\"lon\":2,\"t\":4}\n";
    CHECK_THROWS_AS(trajectories_from_jsonl(unsorted, "u.jsonl"), ParseError);
  }
  SUBCASE("non-increasing timestamps are rejected") {
    const std::string stale =
        "{\"agent_id\":\"a\",\"lat\":1,\"lon\":2,\"t\":5}\n"
        "{\"agent_id\":\"a\",\"lat\":1,\"lon\":2,\"t\":5}\n";
    CHECK_THROWS_AS(trajectories_from_jsonl(stale, "s.jsonl"), ParseError);
  }
}

TEST_CASE("sequence JSONL and metadata round trip") {
  std::vector<TokenSequence> seqs;
  seqs.push_back(TokenSequence{0, "a", {3, 7, 7}, 100, 450});
  seqs.push_back(TokenSequence{1, "b", {5, 2}, 500, 900});
  const auto back = sequences_from_jsonl(sequences_to_jsonl(seqs), "s.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].tokens == std::vector<int>{3, 7, 7});
  CHECK(back[1].subtraj_id == 1);
  CHECK(back[1].t_end == 900);

  GridSpec g{1.0, 2.0, 250.0, 4, 8};
  PreprocessConfig cfg;
  cfg.w_max = 18;
  CorpusStats stats;
  stats.n_agents = 2;
  stats.n_train_sequences = 1;
  stats.n_test_sequences = 1;
  stats.min_len = 2;
  stats.max_len = 3;
  stats.split_t = 480;
  stats.failures = {"agent 'x': out of bounds"};
  GridSpec g2;
  PreprocessConfig cfg2;
  CorpusStats stats2;
  meta_from_json(meta_to_json(g, cfg, stats), g2, cfg2, stats2);
  CHECK(g2.n_cols == 8);
  CHECK(cfg2.w_max == 18);
  CHECK(stats2.split_t == 480);
  CHECK(stats2.failures.size() == 1);
}

TEST_CASE("POI CSV handles quoting") {
  std::vector<Poi> pois = {
      Poi{"p1", "Joe's, Diner", "restaurant", 1.5, -2.5},
      Poi{"p2", "plain", "cafe", 0.0, 0.0},
  };
  const std::string text = pois_to_csv(pois);
  const auto back = pois_from_csv(text, "p.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "Joe's, Diner");
  CHECK(back[0].lat == 1.5);
  CHECK(back[1].category == "cafe");
  CHECK_THROWS_AS(pois_from_csv("bogus,header\n", "p.csv"), ParseError);
}

TEST_CASE("labels CSV round trip and validation") {
  const std::map<std::string, int> labels = {{"a", 0}, {"b", 1}};
  CHECK(labels_from_csv(labels_to_csv(labels), "l.csv") == labels);
  CHECK_THROWS_AS(labels_from_csv("agent_id,label\na,2\n", "l.csv"), ParseError);
}

TEST_CASE("cluster model and grid vector serialization round trips") {
  ClusterModel m;
  m.k = 2;
  m.seed = 9;
  m.centroids.resize(2, 3);
  m.centroids << 0.5, -1.0, 2.0, 1.0 / 3.0, 0.0, 4.5;
  const ClusterModel back = cluster_model_from_json(cluster_model_to_json(m));
  CHECK(back.k == 2);
  CHECK(back.seed == 9);
  CHECK(back.centroids == m.centroids);

  GridPoiVectors gv;
  gv[4] = Eigen::Vector3i(1, 0, 2);
  gv[9] = Eigen::Vector3i(0, 5, 0);
  int n_classes = 0;
  const auto gv2 = grid_vectors_from_jsonl(grid_vectors_to_jsonl(gv), "g.jsonl", n_classes);
  CHECK(n_classes == 3);
  REQUIRE(gv2.size() == 2);
  CHECK(gv2.at(4) == gv.at(4));
  CHECK(gv2.at(9) == gv.at(9));
}

TEST_CASE("score CSV round trips exactly") {
  std::vector<ScoreRecord> scores = {
      ScoreRecord{0, "a", -3.5, 4.5},
      ScoreRecord{1, "b", -1.0 / 3.0, 1.0 + 1.0 / 3.0},
  };
  const auto back = scores_from_csv(scores_to_csv(scores), "s.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].recon_loglik == scores[0].recon_loglik);
  CHECK(back[1].score == scores[1].score);
  CHECK(back[1].agent_id == "b");
}

TEST_CASE("checkpoint bytes round trip bit-exactly and validate the version") {
  HyperParams hp;
  hp.d_tok = 4;
  hp.d_agent = 3;
  hp.d_ctx = 3;
  hp.d_hid = 5;
  hp.d_z = 2;
  Checkpoint ck;
  ck.hp = hp;
  ck.vocab = 7;
  ck.k_poi = 2;
  ck.context_mode = "combined";
  ck.agent_rows = {{"alice", 1}, {"bob", 2}};
  ck.params = init_params<double>(hp, ck.vocab, 2, ck.k_poi, 77);

  const std::string bytes = checkpoint_to_bytes(ck);
  const Checkpoint back = checkpoint_from_bytes(bytes);
  CHECK(back.context_mode == "combined");
  CHECK(back.vocab == 7);
  CHECK(back.agent_rows == ck.agent_rows);
  CHECK(back.hp.d_hid == 5);
  bool same = true;
  for_each_tensor_pair(const_cast<ModelParams<double>&>(ck.params), back.params,
                       [&](const char*, const auto& a, const auto& b) {
                         if (a.rows() != b.rows() || a.cols() != b.cols() || a != b) same = false;
                       });
  CHECK(same);
  // Serialization is stable.
  CHECK(checkpoint_to_bytes(back) == bytes);

  SUBCASE("a wrong version is rejected") {
    Checkpoint bad = ck;
    bad.version = "cavae-v2";
    CHECK_THROWS_AS(checkpoint_from_bytes(checkpoint_to_bytes(bad)), ParseError);
  }
  SUBCASE("truncated data is rejected") {
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, bytes.size() - 9)), ParseError);
  }
}

TEST_CASE("atomic writes leave the final file and no temporary") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "trajscope_io_test";
  fs::create_directories(dir);
  const std::string path = (dir / "artifact.txt").string();
  atomic_write_file(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  CHECK_FALSE(fs::exists(path + ".tmp"));
  atomic_write_file(path, "replaced\n");
  CHECK(read_file(path) == "replaced\n");
  fs::remove_all(dir);
}

TEST_CASE("pr curve JSON shape") {
  PrCurve pr;
  pr.points = {{0.5, 1.0}, {1.0, 0.25}};
  pr.average_precision = 0.625;
  const std::string j = pr_curve_to_json(pr);
  CHECK(j.find("\"points\":[[0.5,1],[1,0.25]]") != std::string::npos);
  CHECK(j.find("\"average_precision\":0.625") != std::string::npos);
}
