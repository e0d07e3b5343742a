#include "trajscope/poi.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "trajscope/rng.hpp"

namespace trajscope {

std::vector<std::string> category_table(const std::vector<Poi>& pois) {
  std::set<std::string> cats;
  for (const Poi& p : pois) cats.insert(p.category);
  return {cats.begin(), cats.end()};
}

int category_index(const std::vector<std::string>& categories, const std::string& category) {
  const auto it = std::lower_bound(categories.begin(), categories.end(), category);
  if (it == categories.end() || *it != category) {
    throw std::invalid_argument("unknown POI category: " + category);
  }
  return static_cast<int>(it - categories.begin());
}

Eigen::VectorXd embed_poi(std::size_t index, const std::vector<Poi>& pois,
                          const std::vector<std::string>& categories, double radius_m) {
  const int nc = static_cast<int>(categories.size());
  const Poi& p = pois[index];
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * nc);
  v[category_index(categories, p.category)] = 1.0;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(nc);
  double total = 0.0;
  for (std::size_t q = 0; q < pois.size(); ++q) {
    if (q == index) continue;
    const double d = haversine_m(p.lat, p.lon, pois[q].lat, pois[q].lon);
    if (d > radius_m) continue;
    const double w = 1.0 / (1.0 + d / 100.0);
    hist[category_index(categories, pois[q].category)] += w;
    total += w;
  }
  if (total > 0.0) v.tail(nc) = hist / total;
  return v;
}

Eigen::MatrixXd embed_all_pois(const std::vector<Poi>& pois,
                               const std::vector<std::string>& categories, double radius_m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pois.size()), 2 * categories.size());
  for (std::size_t i = 0; i < pois.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = embed_poi(i, pois, categories, radius_m).transpose();
  }
  return out;
}

namespace {

std::vector<int> assign_all(const Eigen::MatrixXd& x, const Eigen::MatrixXd& centroids) {
  std::vector<int> a(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = (x.row(i) - centroids.row(0)).squaredNorm();
    for (Eigen::Index k = 1; k < centroids.rows(); ++k) {
      const double d = (x.row(i) - centroids.row(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    a[static_cast<std::size_t>(i)] = best;
  }
  return a;
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd c(k, x.cols());
  c.row(0) = x.row(rng.uniform_int(static_cast<int>(n)));
  Eigen::VectorXd d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = rng.uniform_int(static_cast<int>(n));
    } else {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
        pick = i;
      }
    }
    c.row(j) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
  }
  return c;
}

}  // namespace

Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& embeddings, int k, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 0x6b6d65616e73ull);  // "kmeans"
  return kmeanspp_init(embeddings, k, rng);
}

ClusterModel fit_clusters(const Eigen::MatrixXd& embeddings, int k, std::uint64_t seed) {
  const Eigen::Index n = embeddings.rows();
  if (n < k) {
    throw TooFewPointsError("fit_clusters: " + std::to_string(n) + " points for k=" +
                            std::to_string(k));
  }
  Eigen::MatrixXd centroids = kmeans_init(embeddings, k, seed);
  std::vector<int> prev;
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<int> assign = assign_all(embeddings, centroids);

    // Re-seed empty clusters to the point farthest from its centroid.
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    std::vector<bool> taken(static_cast<std::size_t>(n), false);
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      double far_d = -1.0;
      Eigen::Index far_i = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        const double d =
            (embeddings.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      centroids.row(j) = embeddings.row(far_i);
      taken[static_cast<std::size_t>(far_i)] = true;
      assign = assign_all(embeddings, centroids);
      counts.assign(static_cast<std::size_t>(k), 0);
      for (int a : assign) ++counts[static_cast<std::size_t>(a)];
    }

    if (assign == prev) break;
    prev = assign;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, embeddings.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += embeddings.row(i);
    }
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        centroids.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      }
    }
  }
  ClusterModel m;
  m.k = k;
  m.seed = seed;
  m.centroids = centroids;
  return m;
}

int assign_cluster(const Eigen::VectorXd& embedding, const ClusterModel& model) {
  int best = 0;
  double best_d = (embedding.transpose() - model.centroids.row(0)).squaredNorm();
  for (Eigen::Index k = 1; k < model.centroids.rows(); ++k) {
    const double d = (embedding.transpose() - model.centroids.row(k)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

double kmeans_inertia(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
      best = std::min(best, (embeddings.row(i) - centroids.row(k)).squaredNorm());
    }
    total += best;
  }
  return total;
}

GridVectorsResult grid_vectors(const std::vector<Poi>& pois, const std::vector<int>& class_ids,
                               int n_classes, const GridSpec& g) {
  GridVectorsResult res;
  res.n_classes = n_classes;
  for (std::size_t i = 0; i < pois.size(); ++i) {
    int token;
    try {
      token = cell_of(pois[i].lat, pois[i].lon, g);
    } catch (const OutOfBoundsError&) {
      ++res.skipped_out_of_bounds;
      continue;
    }
    auto [it, inserted] = res.vectors.try_emplace(token, Eigen::VectorXi::Zero(n_classes));
    it->second[class_ids[i]] += 1;
  }
  return res;
}

GridVectorsResult grid_cluster_vectors(const std::vector<Poi>& pois,
                                       const Eigen::MatrixXd& embeddings,
                                       const ClusterModel& model, const GridSpec& g) {
  std::vector<int> ids(pois.size());
  for (std::size_t i = 0; i < pois.size(); ++i) {
    ids[i] = assign_cluster(embeddings.row(static_cast<Eigen::Index>(i)).transpose(), model);
  }
  return grid_vectors(pois, ids, model.k, g);
}

GridVectorsResult baseline_category_vectors(const std::vector<Poi>& pois,
                                            const std::vector<std::string>& categories,
                                            const GridSpec& g) {
  std::vector<int> ids(pois.size());
  for (std::size_t i = 0; i < pois.size(); ++i) {
    ids[i] = category_index(categories, pois[i].category);
  }
  return grid_vectors(pois, ids, static_cast<int>(categories.size()), g);
}

Eigen::VectorXd subtraj_context(const std::vector<int>& tokens, const GridPoiVectors& gv,
                                int n_classes) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_classes);
  for (int t : tokens) {
    const auto it = gv.find(t);
    if (it != gv.end()) out += it->second.cast<double>();
  }
  return out;
}

std::vector<std::pair<int, int>> dominant_class_report(const GridPoiVectors& gv) {
  std::vector<std::pair<int, int>> out;
  out.reserve(gv.size());
  for (const auto& [token, counts] : gv) {
    int best = 0;
    for (int k = 1; k < counts.size(); ++k) {
      if (counts[k] > counts[best]) best = k;
    }
    out.emplace_back(token, best);
  }
  return out;
}

}  // namespace trajscope
