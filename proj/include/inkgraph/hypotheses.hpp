#pragma once

#include "inkgraph/annotation.hpp"
#include "inkgraph/ink.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace inkgraph {

inline constexpr std::string_view kJunkLabel = "junk";

struct LabelScore {
  std::string label;
  double score = 0.0;
  friend bool operator==(const LabelScore&, const LabelScore&) = default;
};

/// A classifier output over SL + {junk} or RL + {junk}.
using Distribution = std::vector<LabelScore>;

struct SymbolHypothesis {
  int id = 0;
  std::vector<int> stroke_ids;    // sorted
  std::vector<LabelScore> labels;  // descending, junk removed
  double junk_score = 0.0;         // raw junk probability from the scorer
};

struct RelationHypothesis {
  int src = 0;
  int dst = 0;
  std::vector<LabelScore> labels;
  double junk_score = 0.0;
};

struct HypothesesGraph {
  std::vector<SymbolHypothesis> vertices;
  std::vector<RelationHypothesis> edges;
  std::vector<int> stroke_universe;  // sorted

  /// Vertex whose stroke set equals `stroke_ids` exactly, or -1.
  int find_vertex(const std::vector<int>& stroke_ids) const;
  /// Edge src -> dst, or nullptr.
  const RelationHypothesis* find_edge(int src, int dst) const;
  /// Throws validation error when an invariant of the graph is broken.
  void validate() const;
  /// Deterministic text listing of vertices and edges with their label lists.
  std::string dump() const;
};

/// Keeps the shortest descending prefix whose cumulative score strictly
/// exceeds `tr`, then strips junk and zero-score labels. Returns nullopt
/// (rejected) when junk is ranked first with a score above `tr`, or when
/// nothing but junk would survive.
std::optional<std::vector<LabelScore>> prune_labels(const std::vector<LabelScore>& scores, double tr);

/// Sorts by descending score, ties by label, so the result can go to prune_labels.
void sort_descending(std::vector<LabelScore>& scores);

class Scorer {
public:
  virtual ~Scorer() = default;
  virtual Distribution score_symbol(const std::vector<int>& stroke_ids, const StrokeSet& context) const = 0;
  virtual Distribution score_relation(const SymbolHypothesis& src, const SymbolHypothesis& dst,
                                      const StrokeSet& context) const = 0;
};

/// Throws scorer contract error unless scores lie in [0,1], sum to 1 +- 1e-6
/// and labels are distinct.
void check_distribution(const Distribution& d, std::string_view what);

enum class CandidateOrder { left_to_right, both };

struct HypothesesConfig {
  double t_symb = 0.98;
  double t_rel = 0.85;
  int max_group = 4;
  int knn = 4;
  int rel_knn = 12;
  CandidateOrder order = CandidateOrder::left_to_right;
};

/// Stroke subsets of size <= max_group that are connected in the symmetric
/// k-nearest-neighbour graph over bounding-box centres. Sorted by size then
/// lexicographically; singletons are always included.
std::vector<std::vector<int>> propose_symbol_groups(const StrokeSet& strokes, int max_group, int knn);

HypothesesGraph build_hypotheses_graph(const StrokeSet& strokes, const Scorer& scorer, const HypothesesConfig& cfg);

/// Scores straight from a ground truth: 1 - noise on the true label, the noise
/// spread evenly over every other label including junk.
class OracleScorer final : public Scorer {
public:
  OracleScorer(GroundTruth truth, std::vector<std::string> symbol_labels, std::vector<std::string> relation_labels,
               double noise = 0.0, std::uint64_t seed = 0);

  Distribution score_symbol(const std::vector<int>& stroke_ids, const StrokeSet& context) const override;
  Distribution score_relation(const SymbolHypothesis& src, const SymbolHypothesis& dst,
                              const StrokeSet& context) const override;

  const GroundTruth& truth() const { return truth_; }
  std::uint64_t seed() const { return seed_; }

private:
  Distribution spread(const std::vector<std::string>& labels, const std::string& winner) const;

  GroundTruth truth_;
  std::vector<std::string> symbol_labels_;
  std::vector<std::string> relation_labels_;
  double noise_;
  std::uint64_t seed_;
};

/// Nearest-centroid classifier over normalized shape features, with a softmax
/// over negative distances and a constant junk floor. Good enough for demos.
class BaselineScorer final : public Scorer {
public:
  struct Sample {
    StrokeSet strokes;
    GroundTruth truth;
  };

  void fit(const std::vector<Sample>& corpus);
  bool fitted() const { return !symbol_centroids_.empty(); }

  Distribution score_symbol(const std::vector<int>& stroke_ids, const StrokeSet& context) const override;
  Distribution score_relation(const SymbolHypothesis& src, const SymbolHypothesis& dst,
                              const StrokeSet& context) const override;

  static constexpr double kJunkFloor = 0.02;
  static constexpr double kTemperature = 0.1;

private:
  std::map<std::string, std::vector<double>> symbol_centroids_;
  std::map<std::string, std::vector<double>> relation_centroids_;
};

std::vector<double> symbol_features(const std::vector<int>& stroke_ids, const StrokeSet& context);
std::vector<double> relation_features(const std::vector<int>& src, const std::vector<int>& dst,
                                      const StrokeSet& context);

}  // namespace inkgraph
