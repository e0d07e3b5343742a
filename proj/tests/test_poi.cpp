#include <doctest.h>

#include <cmath>
#include <set>
#include <unordered_map>

#include "trajscope/io.hpp"
#include "trajscope/poi.hpp"
#include "trajscope/rng.hpp"

using namespace trajscope;

namespace {

constexpr double kMPerDeg = kEarthRadiusM * kDegToRad;

Poi poi(const std::string& id, const std::string& cat, double lat, double lon) {
  return Poi{id, cat + "_" + id, cat, lat, lon};
}

}  // namespace

TEST_CASE("category table is sorted and indexable") {
  const std::vector<Poi> pois = {poi("1", "cafe", 0, 0), poi("2", "airport", 0, 0),
                                 poi("3", "cafe", 0, 0), poi("4", "school", 0, 0)};
  const auto cats = category_table(pois);
  CHECK(cats == std::vector<std::string>{"airport", "cafe", "school"});
  CHECK(category_index(cats, "airport") == 0);
  CHECK(category_index(cats, "school") == 2);
  CHECK_THROWS_AS(category_index(cats, "zoo"), std::invalid_argument);
}

TEST_CASE("embedding of an isolated POI is a bare one-hot") {
  const std::vector<Poi> pois = {poi("1", "cafe", 0, 0), poi("2", "school", 1.0, 1.0)};
  const auto cats = category_table(pois);  // cafe=0, school=1
  const Eigen::VectorXd v = embed_poi(0, pois, cats, 500.0);
  REQUIRE(v.size() == 4);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 0.0);
  CHECK(v[3] == 0.0);
}

TEST_CASE("two co-located cafes see each other as their whole neighborhood") {
  const std::vector<Poi> pois = {poi("1", "cafe", 0, 0), poi("2", "cafe", 0, 0)};
  const auto cats = category_table(pois);
  for (std::size_t i = 0; i < 2; ++i) {
    const Eigen::VectorXd v = embed_poi(i, pois, cats, 500.0);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == 1.0);  // own one-hot
    CHECK(v[1] == 1.0);  // neighbor histogram normalized to one entry
  }
}

TEST_CASE("neighbor histogram uses hand-computed distance weights") {
  // Two schools at 100 m, one airport at 400 m: weights 1/2, 1/2, 1/5.
  const std::vector<Poi> pois = {
      poi("c", "cafe", 0, 0),
      poi("s1", "school", 100.0 / kMPerDeg, 0),
      poi("s2", "school", -100.0 / kMPerDeg, 0),
      poi("a", "airport", 400.0 / kMPerDeg, 0),
  };
  const auto cats = category_table(pois);  // airport=0, cafe=1, school=2
  const Eigen::VectorXd v = embed_poi(0, pois, cats, 500.0);
  REQUIRE(v.size() == 6);
  CHECK(v[1] == 1.0);
  const double total = 0.5 + 0.5 + 0.2;
  CHECK(v[3 + 0] == doctest::Approx(0.2 / total).epsilon(1e-9));
  CHECK(v[3 + 1] == 0.0);
  CHECK(v[3 + 2] == doctest::Approx(1.0 / total).epsilon(1e-9));
}

TEST_CASE("k points with k clusters reach zero inertia") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 10, 0, 0, 10, 10, 10;
  const ClusterModel m = fit_clusters(x, 4, 9);
  CHECK(kmeans_inertia(x, m.centroids) == 0.0);
  // Every point is its own centroid.
  std::set<int> assigned;
  for (Eigen::Index i = 0; i < 4; ++i) {
    assigned.insert(assign_cluster(x.row(i).transpose(), m));
  }
  CHECK(assigned.size() == 4);
}

TEST_CASE("two well-separated blobs are recovered") {
  Rng rng(21);
  const Eigen::Vector2d c0(0.0, 0.0), c1(100.0, 100.0);  // separation 100x stddev 1
  Eigen::MatrixXd x(60, 2);
  for (int i = 0; i < 60; ++i) {
    const Eigen::Vector2d c = i < 30 ? c0 : c1;
    x(i, 0) = c[0] + rng.normal();
    x(i, 1) = c[1] + rng.normal();
  }
  const ClusterModel m = fit_clusters(x, 2, 33);
  // Oracle: nearest blob mean.
  const int flip = assign_cluster(x.row(0).transpose(), m);
  for (int i = 0; i < 60; ++i) {
    const int truth =
        (x.row(i).transpose() - c0).squaredNorm() < (x.row(i).transpose() - c1).squaredNorm() ? 0
                                                                                              : 1;
    CHECK(assign_cluster(x.row(i).transpose(), m) == (truth ^ flip));
  }
}

TEST_CASE("Lloyd's iterations never increase inertia past the k-means++ start") {
  Rng rng(4);
  Eigen::MatrixXd x(50, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-5, 5);
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const Eigen::MatrixXd init = kmeans_init(x, 5, seed);
    const ClusterModel m = fit_clusters(x, 5, seed);
    CHECK(kmeans_inertia(x, m.centroids) <= kmeans_inertia(x, init) + 1e-12);
  }
}

TEST_CASE("clustering is deterministic under the seed") {
  Rng rng(40);
  Eigen::MatrixXd x(40, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
  const ClusterModel a = fit_clusters(x, 6, 1234);
  const ClusterModel b = fit_clusters(x, 6, 1234);
  CHECK(cluster_model_to_json(a) == cluster_model_to_json(b));
}

TEST_CASE("too few points for the requested k") {
  Eigen::MatrixXd x(2, 2);
  x.setZero();
  CHECK_THROWS_AS(fit_clusters(x, 3, 1), TooFewPointsError);
}

TEST_CASE("cluster assignment: exact centroid, tie-break, brute-force scan") {
  ClusterModel m;
  m.k = 5;
  m.centroids.resize(5, 2);
  m.centroids << 0, 0, 2, 0, 4, 0, 2, 2, 6, 6;

  CHECK(assign_cluster(m.centroids.row(3).transpose(), m) == 3);

  // (2,1) is exactly 1 away from centroids 1 and 3; the tie goes low.
  CHECK(assign_cluster(Eigen::Vector2d(2, 1), m) == 1);

  Rng rng(77);
  for (int it = 0; it < 200; ++it) {
    const Eigen::Vector2d e(rng.uniform(-8, 8), rng.uniform(-8, 8));
    int best = 0;
    double best_d = (e.transpose() - m.centroids.row(0)).squaredNorm();
    for (int k = 1; k < 5; ++k) {
      const double d = (e.transpose() - m.centroids.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    CHECK(assign_cluster(e, m) == best);
  }
}

TEST_CASE("grid vectors tally POIs per cell and skip out-of-bounds") {
  GridSpec g{0, 0, 500, 4, 4};
  SUBCASE("no POIs: empty map reads as zero vectors") {
    const auto res = grid_vectors({}, {}, 3, g);
    CHECK(res.vectors.empty());
    CHECK(subtraj_context({0, 1, 2}, res.vectors, 3) == Eigen::VectorXd::Zero(3));
  }
  SUBCASE("three POIs of one class in one cell") {
    double lat, lon;
    cell_center(5, g, lat, lon);
    std::vector<Poi> pois = {poi("1", "x", lat, lon), poi("2", "x", lat, lon),
                             poi("3", "x", lat, lon)};
    const auto res = grid_vectors(pois, {2, 2, 2}, 4, g);
    REQUIRE(res.vectors.count(5) == 1);
    CHECK(res.vectors.at(5)[2] == 3);
    CHECK(res.vectors.at(5).sum() == 3);
  }
  SUBCASE("multi-cell scatter equals an independent tally") {
    Rng rng(3);
    std::vector<Poi> pois;
    std::vector<int> cls;
    for (int i = 0; i < 120; ++i) {
      double lat, lon;
      cell_center(rng.uniform_int(16), g, lat, lon);
      pois.push_back(poi(std::to_string(i), "c", lat, lon));
      cls.push_back(rng.uniform_int(5));
    }
    pois.push_back(poi("oob", "c", 50.0, 50.0));
    cls.push_back(0);
    const auto res = grid_vectors(pois, cls, 5, g);
    CHECK(res.skipped_out_of_bounds == 1);
    std::unordered_map<int, std::vector<int>> tally;
    for (int i = 0; i < 120; ++i) {
      const int cell = cell_of(pois[static_cast<std::size_t>(i)].lat,
                               pois[static_cast<std::size_t>(i)].lon, g);
      auto& v = tally[cell];
      v.resize(5, 0);
      v[static_cast<std::size_t>(cls[static_cast<std::size_t>(i)])] += 1;
    }
    CHECK(res.vectors.size() == tally.size());
    for (const auto& [cell, counts] : res.vectors) {
      const auto& expect = tally.at(cell);
      for (int k = 0; k < 5; ++k) CHECK(counts[k] == expect[static_cast<std::size_t>(k)]);
    }
  }
}

TEST_CASE("subtrajectory context sums cell vectors with repeats, order-free") {
  GridPoiVectors gv;
  gv[1] = Eigen::Vector3i(1, 0, 2);
  gv[2] = Eigen::Vector3i(0, 4, 0);

  SUBCASE("tokens in POI-free cells give zero") {
    CHECK(subtraj_context({7, 9}, gv, 3) == Eigen::VectorXd::Zero(3));
  }
  SUBCASE("a repeated token counts twice") {
    const Eigen::VectorXd v = subtraj_context({1, 1}, gv, 3);
    CHECK(v == 2.0 * gv[1].cast<double>());
  }
  SUBCASE("permutation invariance and additivity") {
    Rng rng(8);
    for (int it = 0; it < 50; ++it) {
      std::vector<int> s1, s2;
      for (int i = 0; i < 6; ++i) s1.push_back(rng.uniform_int(4));
      for (int i = 0; i < 5; ++i) s2.push_back(rng.uniform_int(4));
      std::vector<int> cat = s1;
      cat.insert(cat.end(), s2.begin(), s2.end());
      std::vector<int> shuffled = cat;
      rng.shuffle(shuffled);
      CHECK(subtraj_context(cat, gv, 3) == subtraj_context(shuffled, gv, 3));
      CHECK(subtraj_context(cat, gv, 3) ==
            subtraj_context(s1, gv, 3) + subtraj_context(s2, gv, 3));
    }
  }
  SUBCASE("mixed sequence equals per-token accumulation") {
    const std::vector<int> tokens = {1, 2, 7, 1};
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(3);
    for (int t : tokens) {
      if (gv.count(t)) expect += gv[t].cast<double>();
    }
    CHECK(subtraj_context(tokens, gv, 3) == expect);
  }
}

TEST_CASE("same-category POIs in different surroundings separate in embedding space") {
  // Six cafes in a school neighborhood, six more in a terminal
  // neighborhood, far apart.
  std::vector<Poi> pois;
  for (int i = 0; i < 6; ++i) pois.push_back(poi("c" + std::to_string(i), "cafe", 0, 0));
  for (int i = 0; i < 4; ++i) {
    pois.push_back(poi("s" + std::to_string(i), "school", 100.0 / kMPerDeg, 0));
  }
  const double far = 50000.0 / kMPerDeg;
  for (int i = 0; i < 6; ++i) pois.push_back(poi("d" + std::to_string(i), "cafe", far, far));
  for (int i = 0; i < 4; ++i) {
    pois.push_back(poi("t" + std::to_string(i), "terminal", far + 100.0 / kMPerDeg, far));
  }
  const auto cats = category_table(pois);
  const Eigen::MatrixXd embs = embed_all_pois(pois, cats, 500.0);

  // Same category, disjoint neighbor histograms, distinct embeddings.
  CHECK((embs.row(0) - embs.row(10)).norm() > 0.0);

  const ClusterModel m = fit_clusters(embs, 2, 5);
  const int cluster_near_schools = assign_cluster(embs.row(0).transpose(), m);
  const int cluster_near_terminals = assign_cluster(embs.row(10).transpose(), m);
  CHECK(cluster_near_schools != cluster_near_terminals);
  for (int i = 0; i < 6; ++i) {
    CHECK(assign_cluster(embs.row(i).transpose(), m) == cluster_near_schools);
    CHECK(assign_cluster(embs.row(10 + i).transpose(), m) == cluster_near_terminals);
  }
}

TEST_CASE("baseline category vectors mirror grid vectors keyed by category") {
  GridSpec g{0, 0, 500, 4, 4};
  double lat5, lon5, lat9, lon9;
  cell_center(5, g, lat5, lon5);
  cell_center(9, g, lat9, lon9);
  const std::vector<Poi> pois = {poi("1", "cafe", lat5, lon5), poi("2", "school", lat5, lon5),
                                 poi("3", "cafe", lat9, lon9)};
  const auto cats = category_table(pois);  // cafe=0, school=1
  const auto res = baseline_category_vectors(pois, cats, g);
  CHECK(res.n_classes == 2);
  CHECK(res.vectors.at(5)[0] == 1);
  CHECK(res.vectors.at(5)[1] == 1);
  CHECK(res.vectors.at(9)[0] == 1);
  CHECK(res.vectors.at(9)[1] == 0);
}

TEST_CASE("dominant class report takes the argmax per cell, low id on ties") {
  GridPoiVectors gv;
  gv[3] = Eigen::Vector3i(1, 5, 2);
  gv[8] = Eigen::Vector3i(4, 4, 1);
  const auto report = dominant_class_report(gv);
  REQUIRE(report.size() == 2);
  CHECK(report[0] == std::pair<int, int>{3, 1});
  CHECK(report[1] == std::pair<int, int>{8, 0});
}
