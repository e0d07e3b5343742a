#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajscope/geo.hpp"

namespace trajscope {

struct Poi {
  std::string poi_id;
  std::string name;
  std::string category;
  double lat = 0.0;
  double lon = 0.0;
};

/// Sorted distinct categories; index into this vector is the category id.
std::vector<std::string> category_table(const std::vector<Poi>& pois);

int category_index(const std::vector<std::string>& categories, const std::string& category);

/// Neighborhood-aware POI embedding: one-hot of the POI's own category
/// followed by the distance-weighted category histogram of its neighbors
/// within radius_m (weight 1/(1 + d/100 m), normalized to sum 1; all
/// zeros when there are no neighbors). Two POIs of the same category in
/// different surroundings therefore receive distinct embeddings.
Eigen::VectorXd embed_poi(std::size_t index, const std::vector<Poi>& pois,
                          const std::vector<std::string>& categories, double radius_m);

/// Row i is the embedding of pois[i]; dimension 2 * |categories|.
Eigen::MatrixXd embed_all_pois(const std::vector<Poi>& pois,
                               const std::vector<std::string>& categories, double radius_m);

struct ClusterModel {
  int k = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd centroids;  // k x d
};

class TooFewPointsError : public std::runtime_error {
 public:
  explicit TooFewPointsError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Lloyd's k-means with k-means++ initialization, Euclidean metric, run
/// until the assignment fixpoint or 100 iterations. Empty clusters are
/// re-seeded to the point farthest from its assigned centroid. Fully
/// deterministic under the seed; ties break to the lowest index.
ClusterModel fit_clusters(const Eigen::MatrixXd& embeddings, int k, std::uint64_t seed);

/// Centroids chosen by the seeded k-means++ pass alone, before any Lloyd
/// iteration; fit_clusters(e, k, seed) starts from exactly these.
Eigen::MatrixXd kmeans_init(const Eigen::MatrixXd& embeddings, int k, std::uint64_t seed);

int assign_cluster(const Eigen::VectorXd& embedding, const ClusterModel& model);

double kmeans_inertia(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& centroids);

/// Per-cell class counts. Keyed by grid token; cells without POIs are
/// absent and read as the zero vector.
using GridPoiVectors = std::map<int, Eigen::VectorXi>;

struct GridVectorsResult {
  GridPoiVectors vectors;
  int n_classes = 0;
  std::int64_t skipped_out_of_bounds = 0;
};

/// Tally POIs per grid cell by class id (cluster id, or category id for
/// the raw-category baseline). Out-of-bounds POIs are skipped and counted.
GridVectorsResult grid_vectors(const std::vector<Poi>& pois, const std::vector<int>& class_ids,
                               int n_classes, const GridSpec& g);

/// Assign every POI to its cluster, then tally per cell.
GridVectorsResult grid_cluster_vectors(const std::vector<Poi>& pois,
                                       const Eigen::MatrixXd& embeddings,
                                       const ClusterModel& model, const GridSpec& g);

/// Raw-category baseline: tally per cell by original category id.
GridVectorsResult baseline_category_vectors(const std::vector<Poi>& pois,
                                            const std::vector<std::string>& categories,
                                            const GridSpec& g);

/// Sum of per-cell count vectors over a token sequence (repeats counted
/// per occurrence), cast to reals.
Eigen::VectorXd subtraj_context(const std::vector<int>& tokens, const GridPoiVectors& gv,
                                int n_classes);

/// token -> class with the highest count in that cell (ties to the lowest
/// class id); one row per POI-bearing cell.
std::vector<std::pair<int, int>> dominant_class_report(const GridPoiVectors& gv);

}  // namespace trajscope
