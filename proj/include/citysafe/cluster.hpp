#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace citysafe::cluster {

struct Point {
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const Point&) const = default;
};

/// 2-D coordinates (latitude, longitude in degrees) with stable record ids.
class PointSet {
 public:
  PointSet() = default;
  /// Throws ErrorCode::invalid_argument on non-finite coordinates, duplicate
  /// ids or a length mismatch.
  PointSet(std::vector<Point> points, std::vector<std::string> ids);
  /// Ids are the decimal positions "0".."n-1".
  explicit PointSet(std::vector<Point> points);

  const std::vector<Point>& points() const { return points_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  /// Seeded subsample of at most `n` points, original order preserved.
  PointSet sample(std::size_t n, std::uint64_t seed) const;

 private:
  std::vector<Point> points_;
  std::vector<std::string> ids_;
};

/// Euclidean works on raw degrees. Haversine returns kilometres, so eps
/// values must be given in kilometres when it is selected.
enum class Metric { euclidean, haversine };

double distance(const Point& a, const Point& b, Metric metric = Metric::euclidean);

inline constexpr int kNoise = -1;

struct KMeansParams {
  int k = 8;
  int max_iter = 100;
  std::uint64_t seed = 0;
  int n_init = 1;  // seeded restarts; the lowest final SSE wins
};

struct ClaransParams {
  int k = 2;
  int numlocal = 2;
  int maxneighbor = 100;
  std::uint64_t seed = 0;
};

struct DbscanParams {
  double eps = 0.5;
  int min_pts = 5;
};

struct OpticsParams {
  double eps = 0.5;
  int min_pts = 5;
  double extraction_eps = 0.5;
};

enum class Linkage { ward, complete, average };

struct AgglomerativeParams {
  int n_clusters = 2;
  Linkage linkage = Linkage::ward;
};

struct CliqueParams {
  int intervals = 10;
  int threshold = 0;
};

using ClusterParams =
    std::variant<KMeansParams, ClaransParams, DbscanParams, OpticsParams, AgglomerativeParams, CliqueParams>;

/// "kmeans", "clarans", "dbscan", "optics", "agglo", "clique".
std::string_view algorithm_name(const ClusterParams& p);
std::string_view to_string(Linkage l);
/// Compact JSON object with "algorithm" plus every parameter.
std::string params_to_json(const ClusterParams& p);

struct Clustering {
  std::vector<int> labels;  // cluster id in [0, n_clusters) or kNoise
  ClusterParams params;
  std::optional<double> silhouette;
  int n_clusters = 0;

  std::size_t noise_count() const;
};

/// Renumbers non-noise labels to 0..m-1 in order of first appearance.
int relabel_contiguous(std::vector<int>& labels);

/// Lloyd iteration from a seeded sample of k distinct points, repeated n_init
/// times from one RNG stream; the run with the lowest final SSE is kept
/// (earliest on ties). When `sse_trace` is given it receives the
/// within-cluster sum of squares after every assignment step of the kept
/// run. Throws ErrorCode::parameter when k < 1, n_init < 1 or k exceeds the
/// number of distinct points.
Clustering kmeans(const PointSet& ps, const KMeansParams& p, std::vector<double>* sse_trace = nullptr);

/// Sum of squared Euclidean distances to the cluster means.
double within_cluster_sse(const PointSet& ps, std::span<const int> labels);

struct ClaransTrace {
  std::vector<double> initial_costs;   // one per restart
  std::vector<double> local_minima;    // one per restart
  std::vector<double> accepted_costs;  // every accepted move, in order
  std::vector<std::size_t> best_medoids;
  double best_cost = 0.0;
};

/// Randomized k-medoid search. Each restart starts from a random node and
/// examines random single-medoid swaps (drawn without repetition) until
/// `maxneighbor` consecutive swaps fail to lower the cost; the best local
/// minimum over `numlocal` restarts wins.
Clustering clarans(const PointSet& ps, const ClaransParams& p, Metric metric = Metric::euclidean,
                   ClaransTrace* trace = nullptr);

/// Sum over points of the distance to the nearest medoid.
double medoid_cost(const PointSet& ps, std::span<const std::size_t> medoids, Metric metric = Metric::euclidean);

/// Core points have at least min_pts neighbours within eps (self included).
/// Clusters grow from core points in index order; a border point keeps the
/// first cluster that reaches it.
Clustering dbscan(const PointSet& ps, const DbscanParams& p, Metric metric = Metric::euclidean);

struct OpticsEntry {
  std::size_t index = 0;
  std::optional<double> reachability;
  std::optional<double> core_distance;
};

/// Cluster ordering. Core distance is the distance to the min_pts-th nearest
/// point (self included) when at least min_pts points lie within eps.
std::vector<OpticsEntry> optics(const PointSet& ps, const OpticsParams& p, Metric metric = Metric::euclidean);

/// DBSCAN-style extraction at p.extraction_eps from the ordering alone. A
/// border point visited before all of its core neighbours stays noise here.
/// Throws ErrorCode::parameter when extraction_eps <= 0.
Clustering optics_extract(std::span<const OpticsEntry> ordering, const OpticsParams& p);

/// optics() followed by optics_extract(), then border points left as noise
/// join the first core point in the ordering within extraction_eps.
Clustering optics_cluster(const PointSet& ps, const OpticsParams& p, Metric metric = Metric::euclidean);

struct Merge {
  std::size_t a = 0;  // surviving cluster id (the smaller)
  std::size_t b = 0;  // absorbed cluster id
  double distance = 0.0;
  std::size_t size = 0;  // size of the merged cluster
};

/// Full merge sequence (n-1 merges) under the Lance-Williams update. Cluster
/// ids are point indices; a merged cluster keeps the smaller id. Ties pick the
/// lexicographically smallest (a, b) pair. Ward distances are reported as
/// sqrt of the Lance-Williams squared-distance value.
std::vector<Merge> agglomerative_merges(const PointSet& ps, Linkage linkage, Metric metric = Metric::euclidean,
                                        std::size_t stop_at = 1);

Clustering agglomerative(const PointSet& ps, const AgglomerativeParams& p, Metric metric = Metric::euclidean);

/// Largest input accepted by the agglomerative routines (dense distance matrix).
inline constexpr std::size_t kMaxAgglomerativePoints = 10000;

/// Grid clustering over the bounding box: intervals x intervals equal cells,
/// dense when count > threshold, clusters are edge-connected dense cells
/// numbered in cell order. Points in sparse cells are noise.
Clustering clique(const PointSet& ps, const CliqueParams& p);

/// Mean silhouette over non-noise points; singleton clusters score 0.
/// Throws ErrorCode::undefined_score with fewer than two clusters or fewer
/// than two non-noise points.
double silhouette(const PointSet& ps, std::span<const int> labels, Metric metric = Metric::euclidean);

/// Dispatches on the parameter variant.
Clustering run(const PointSet& ps, const ClusterParams& p, Metric metric = Metric::euclidean);

/// Cartesian product of the axes in a grid JSON object, first axis outermost.
/// Axes are arrays or {"from","to","step"} ranges. Throws
/// ErrorCode::configuration.
std::vector<ClusterParams> expand_grid(std::string_view algorithm, std::string_view grid_json);

struct GridRow {
  ClusterParams params;
  std::optional<double> silhouette;
  int n_clusters = 0;
  std::size_t noise = 0;
  std::string note;  // why the score is undefined, if it is
};

struct GridResult {
  Clustering best;
  std::size_t best_index = 0;
  std::vector<GridRow> table;
};

/// Scores every grid point by silhouette and returns the argmax (earliest
/// grid position on ties). Randomized algorithms get seed ^ grid_index.
/// `threads` = 0 picks the hardware concurrency; results do not depend on it.
/// Throws ErrorCode::invalid_argument on an empty grid and
/// ErrorCode::no_valid_clustering when no grid point has a defined score.
GridResult grid_search(const PointSet& ps, const std::vector<ClusterParams>& grid, std::uint64_t seed,
                       Metric metric = Metric::euclidean, unsigned threads = 0);

}  // namespace citysafe::cluster
