#include "inkgraph/hypotheses.hpp"

#include "connected_subsets.hpp"
#include "inkgraph/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace inkgraph {

namespace {

constexpr std::string_view kModule = "hypotheses";

[[noreturn]] void fail(ErrorKind kind, const std::string& what) { throw Error(kind, kModule, what); }

BoundingBox group_box(const std::vector<int>& stroke_ids, const StrokeSet& context) {
  BoundingBox box = bounding_box(context.strokes[context.index_of(stroke_ids.front())]);
  for (std::size_t i = 1; i < stroke_ids.size(); ++i)
    box.expand(bounding_box(context.strokes[context.index_of(stroke_ids[i])]));
  return box;
}

bool disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return false;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return true;
}

/// Symmetric k-nearest-neighbour graph over strokes; ties broken by index.
std::vector<std::vector<int>> knn_graph(const StrokeSet& strokes, int k,
                                        const std::function<double(int, int)>& distance) {
  const int n = static_cast<int>(strokes.size());
  std::vector<std::set<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> order;
    for (int j = 0; j < n; ++j)
      if (j != i) order.emplace_back(distance(i, j), j);
    std::sort(order.begin(), order.end());
    for (int r = 0; r < std::min<int>(k, static_cast<int>(order.size())); ++r) {
      adj[i].insert(order[r].second);
      adj[order[r].second].insert(i);
    }
  }
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) out[i].assign(adj[i].begin(), adj[i].end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// HypothesesGraph

int HypothesesGraph::find_vertex(const std::vector<int>& stroke_ids) const {
  for (const auto& v : vertices)
    if (v.stroke_ids == stroke_ids) return v.id;
  return -1;
}

const RelationHypothesis* HypothesesGraph::find_edge(int src, int dst) const {
  for (const auto& e : edges)
    if (e.src == src && e.dst == dst) return &e;
  return nullptr;
}

namespace {
void check_label_list(const std::vector<LabelScore>& labels, const std::string& where) {
  if (labels.empty()) fail(ErrorKind::validation, where + " has no labels");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].score < 0.0 || labels[i].score > 1.0) fail(ErrorKind::validation, where + " has a score outside [0,1]");
    if (i && labels[i].score > labels[i - 1].score) fail(ErrorKind::validation, where + " labels are not descending");
    if (!seen.insert(labels[i].label).second) fail(ErrorKind::validation, where + " repeats label " + labels[i].label);
  }
}
}  // namespace

void HypothesesGraph::validate() const {
  const std::set<int> universe(stroke_universe.begin(), stroke_universe.end());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const auto& v = vertices[i];
    const std::string where = "vertex " + std::to_string(v.id);
    if (v.id != static_cast<int>(i)) fail(ErrorKind::validation, where + " is out of order");
    if (v.stroke_ids.empty()) fail(ErrorKind::validation, where + " has no strokes");
    for (int s : v.stroke_ids)
      if (!universe.count(s)) fail(ErrorKind::validation, where + " uses unknown stroke " + std::to_string(s));
    check_label_list(v.labels, where);
  }
  std::set<std::pair<int, int>> pairs;
  for (const auto& e : edges) {
    const std::string where = "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst);
    const int n = static_cast<int>(vertices.size());
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) fail(ErrorKind::validation, where + " has a bad endpoint");
    if (!pairs.emplace(e.src, e.dst).second) fail(ErrorKind::validation, where + " is duplicated");
    if (!disjoint(vertices[e.src].stroke_ids, vertices[e.dst].stroke_ids))
      fail(ErrorKind::validation, where + " joins hypotheses that share strokes");
    check_label_list(e.labels, where);
  }
}

std::string HypothesesGraph::dump() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  auto labels = [&](const std::vector<LabelScore>& ls) {
    for (const auto& l : ls) out << ' ' << l.label << ':' << l.score;
  };
  for (const auto& v : vertices) {
    out << "vertex " << v.id << " {";
    for (std::size_t i = 0; i < v.stroke_ids.size(); ++i) out << (i ? "," : "") << v.stroke_ids[i];
    out << '}';
    labels(v.labels);
    out << '\n';
  }
  auto sorted = edges;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return std::tie(a.src, a.dst) < std::tie(b.src, b.dst); });
  for (const auto& e : sorted) {
    out << "edge " << e.src << ' ' << e.dst;
    labels(e.labels);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Label pruning

void sort_descending(std::vector<LabelScore>& scores) {
  std::sort(scores.begin(), scores.end(), [](const LabelScore& a, const LabelScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.label < b.label;
  });
}

std::optional<std::vector<LabelScore>> prune_labels(const std::vector<LabelScore>& scores, double tr) {
  if (!(tr > 0.0 && tr <= 1.0)) fail(ErrorKind::argument, "pruning threshold must lie in (0,1]");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i && scores[i].score > scores[i - 1].score) fail(ErrorKind::argument, "label scores are not sorted descending");
    total += scores[i].score;
  }
  if (total > 1.0 + 1e-6) fail(ErrorKind::argument, "label scores sum above 1");
  if (scores.empty()) return std::nullopt;
  if (scores.front().label == kJunkLabel && scores.front().score > tr) return std::nullopt;

  std::size_t k = scores.size();
  double prefix = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    prefix += scores[i].score;
    if (prefix > tr) {
      k = i + 1;
      break;
    }
  }
  std::vector<LabelScore> kept;
  for (std::size_t i = 0; i < k; ++i)
    if (scores[i].label != kJunkLabel && scores[i].score > 0.0) kept.push_back(scores[i]);
  if (kept.empty()) return std::nullopt;
  return kept;
}

void check_distribution(const Distribution& d, std::string_view what) {
  if (d.empty()) throw Error(ErrorKind::scorer_contract, kModule, std::string(what) + ": empty distribution");
  std::set<std::string> seen;
  double total = 0.0;
  for (const auto& ls : d) {
    if (!(ls.score >= 0.0 && ls.score <= 1.0))
      throw Error(ErrorKind::scorer_contract, kModule, std::string(what) + ": score outside [0,1] for " + ls.label);
    if (!seen.insert(ls.label).second)
      throw Error(ErrorKind::scorer_contract, kModule, std::string(what) + ": duplicate label " + ls.label);
    total += ls.score;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw Error(ErrorKind::scorer_contract, kModule,
                std::string(what) + ": distribution sums to " + std::to_string(total));
}

// ---------------------------------------------------------------------------
// Candidate generation

std::vector<std::vector<int>> propose_symbol_groups(const StrokeSet& strokes, int max_group, int knn) {
  if (max_group < 1 || knn < 1) fail(ErrorKind::argument, "max_group and knn must be positive");
  std::vector<BoundingBox> boxes;
  for (const auto& s : strokes.strokes) boxes.push_back(bounding_box(s));
  const auto adjacency = knn_graph(strokes, knn, [&](int i, int j) {
    return std::hypot(boxes[i].center_x() - boxes[j].center_x(), boxes[i].center_y() - boxes[j].center_y());
  });

  std::vector<std::vector<int>> groups;
  detail::enumerate_connected_subsets(
      adjacency, static_cast<std::size_t>(max_group), [](const std::vector<int>&, int) { return true; },
      [&](const std::vector<int>& subset) {
        std::vector<int> ids;
        for (int idx : subset) ids.push_back(strokes.strokes[idx].id);
        std::sort(ids.begin(), ids.end());
        groups.push_back(std::move(ids));
        return true;
      });
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return groups;
}

HypothesesGraph build_hypotheses_graph(const StrokeSet& strokes, const Scorer& scorer, const HypothesesConfig& cfg) {
  if (!(cfg.t_symb > 0.0 && cfg.t_symb <= 1.0) || !(cfg.t_rel > 0.0 && cfg.t_rel <= 1.0))
    fail(ErrorKind::argument, "thresholds must lie in (0,1]");
  HypothesesGraph h;
  for (const auto& s : strokes.strokes) h.stroke_universe.push_back(s.id);
  std::sort(h.stroke_universe.begin(), h.stroke_universe.end());
  if (strokes.empty()) return h;

  for (const auto& group : propose_symbol_groups(strokes, cfg.max_group, cfg.knn)) {
    Distribution d = scorer.score_symbol(group, strokes);
    check_distribution(d, "symbol scorer");
    double junk = 0.0;
    for (const auto& ls : d)
      if (ls.label == kJunkLabel) junk = ls.score;
    sort_descending(d);
    auto kept = prune_labels(d, cfg.t_symb);
    if (!kept) continue;
    SymbolHypothesis v;
    v.id = static_cast<int>(h.vertices.size());
    v.stroke_ids = group;
    v.labels = std::move(*kept);
    v.junk_score = junk;
    h.vertices.push_back(std::move(v));
  }

  // Relation candidates: hypotheses owning strokes that are rel_knn-neighbours
  // by bounding-box gap.
  std::map<int, std::size_t> position;
  for (std::size_t i = 0; i < strokes.size(); ++i) position[strokes.strokes[i].id] = i;
  std::vector<BoundingBox> boxes;
  for (const auto& s : strokes.strokes) boxes.push_back(bounding_box(s));
  const auto near = knn_graph(strokes, cfg.rel_knn, [&](int i, int j) { return boxes[i].gap(boxes[j]); });
  const std::size_t n = strokes.size();
  std::vector<char> adjacent(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (int j : near[i]) adjacent[i * n + j] = 1;

  std::vector<BoundingBox> vbox;
  for (const auto& v : h.vertices) vbox.push_back(group_box(v.stroke_ids, strokes));

  auto add_edge = [&](int src, int dst) {
    Distribution d = scorer.score_relation(h.vertices[src], h.vertices[dst], strokes);
    check_distribution(d, "relation scorer");
    double junk = 0.0;
    for (const auto& ls : d)
      if (ls.label == kJunkLabel) junk = ls.score;
    sort_descending(d);
    auto kept = prune_labels(d, cfg.t_rel);
    if (!kept) return;
    h.edges.push_back({src, dst, std::move(*kept), junk});
  };

  for (std::size_t a = 0; a < h.vertices.size(); ++a) {
    for (std::size_t b = a + 1; b < h.vertices.size(); ++b) {
      const auto& va = h.vertices[a];
      const auto& vb = h.vertices[b];
      if (!disjoint(va.stroke_ids, vb.stroke_ids)) continue;
      bool close = false;
      for (int sa : va.stroke_ids) {
        for (int sb : vb.stroke_ids)
          if (adjacent[position[sa] * n + position[sb]]) {
            close = true;
            break;
          }
        if (close) break;
      }
      if (!close) continue;
      if (cfg.order == CandidateOrder::both) {
        add_edge(static_cast<int>(a), static_cast<int>(b));
        add_edge(static_cast<int>(b), static_cast<int>(a));
      } else {
        const auto ka = std::make_tuple(vbox[a].min_x, vbox[a].min_y, a);
        const auto kb = std::make_tuple(vbox[b].min_x, vbox[b].min_y, b);
        if (ka < kb)
          add_edge(static_cast<int>(a), static_cast<int>(b));
        else
          add_edge(static_cast<int>(b), static_cast<int>(a));
      }
    }
  }
  std::sort(h.edges.begin(), h.edges.end(),
            [](const auto& x, const auto& y) { return std::tie(x.src, x.dst) < std::tie(y.src, y.dst); });
  return h;
}

// ---------------------------------------------------------------------------
// OracleScorer

OracleScorer::OracleScorer(GroundTruth truth, std::vector<std::string> symbol_labels,
                           std::vector<std::string> relation_labels, double noise, std::uint64_t seed)
    : truth_(std::move(truth)),
      symbol_labels_(std::move(symbol_labels)),
      relation_labels_(std::move(relation_labels)),
      noise_(noise),
      seed_(seed) {
  if (!(noise_ >= 0.0 && noise_ < 1.0)) fail(ErrorKind::argument, "oracle noise must lie in [0,1)");
  for (auto* labels : {&symbol_labels_, &relation_labels_}) {
    std::sort(labels->begin(), labels->end());
    labels->erase(std::unique(labels->begin(), labels->end()), labels->end());
  }
  if (symbol_labels_.empty() || relation_labels_.empty())
    fail(ErrorKind::argument, "oracle needs non-empty symbol and relation label sets");
  for (const auto& s : truth_.symbols)
    if (!std::binary_search(symbol_labels_.begin(), symbol_labels_.end(), s.label))
      fail(ErrorKind::data, "ground-truth symbol label '" + s.label + "' is not a known symbol label");
  for (const auto& r : truth_.relations)
    if (!std::binary_search(relation_labels_.begin(), relation_labels_.end(), r.label))
      fail(ErrorKind::data, "ground-truth relation label '" + r.label + "' is not a known relation label");
}

Distribution OracleScorer::spread(const std::vector<std::string>& labels, const std::string& winner) const {
  // |labels| + 1 outcomes (junk included); the winner keeps 1 - noise and the
  // other |labels| outcomes share the noise evenly.
  const double share = noise_ / static_cast<double>(labels.size());
  Distribution d;
  for (const auto& l : labels) d.push_back({l, l == winner ? 1.0 - noise_ : share});
  d.push_back({std::string(kJunkLabel), winner == kJunkLabel ? 1.0 - noise_ : share});
  return d;
}

Distribution OracleScorer::score_symbol(const std::vector<int>& stroke_ids, const StrokeSet&) const {
  const int s = truth_.find_symbol(stroke_ids);
  return spread(symbol_labels_, s < 0 ? std::string(kJunkLabel) : truth_.symbols[s].label);
}

Distribution OracleScorer::score_relation(const SymbolHypothesis& src, const SymbolHypothesis& dst,
                                          const StrokeSet&) const {
  const int a = truth_.find_symbol(src.stroke_ids);
  const int b = truth_.find_symbol(dst.stroke_ids);
  std::string label;
  if (a >= 0 && b >= 0) label = truth_.relation_label(a, b);
  return spread(relation_labels_, label.empty() ? std::string(kJunkLabel) : label);
}

// ---------------------------------------------------------------------------
// BaselineScorer

namespace {
constexpr int kGrid = 6;

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

Distribution softmax_with_floor(const std::map<std::string, std::vector<double>>& centroids,
                                const std::vector<double>& feature) {
  std::vector<std::pair<std::string, double>> logits;
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& [label, c] : centroids) {
    const double z = -std::sqrt(squared_distance(c, feature)) / BaselineScorer::kTemperature;
    logits.emplace_back(label, z);
    top = std::max(top, z);
  }
  double total = 0.0;
  for (auto& [_, z] : logits) total += (z = std::exp(z - top));
  Distribution d;
  for (const auto& [label, z] : logits) d.push_back({label, (1.0 - BaselineScorer::kJunkFloor) * z / total});
  d.push_back({std::string(kJunkLabel), BaselineScorer::kJunkFloor});
  return d;
}
}  // namespace

std::vector<double> symbol_features(const std::vector<int>& stroke_ids, const StrokeSet& context) {
  const BoundingBox box = group_box(stroke_ids, context);
  const double size = std::max({box.width(), box.height(), 1e-9});
  std::vector<double> f(kGrid * kGrid + 2, 0.0);
  double mass = 0.0;
  for (int id : stroke_ids) {
    const Stroke s = resample(context.strokes[context.index_of(id)], size / 24.0);
    for (const auto& p : s.points) {
      // Centre the shape in a square cell of side `size`.
      const double u = (p.x - box.center_x()) / size + 0.5;
      const double v = (p.y - box.center_y()) / size + 0.5;
      const int gx = std::clamp(static_cast<int>(u * kGrid), 0, kGrid - 1);
      const int gy = std::clamp(static_cast<int>(v * kGrid), 0, kGrid - 1);
      f[gy * kGrid + gx] += 1.0;
      mass += 1.0;
    }
  }
  for (int i = 0; i < kGrid * kGrid; ++i) f[i] /= std::max(mass, 1.0);
  f[kGrid * kGrid] = std::clamp(std::log((box.width() + 1e-9) / (box.height() + 1e-9)), -3.0, 3.0) / 6.0;
  f[kGrid * kGrid + 1] = static_cast<double>(stroke_ids.size()) / 4.0;
  return f;
}

std::vector<double> relation_features(const std::vector<int>& src, const std::vector<int>& dst,
                                      const StrokeSet& context) {
  const BoundingBox a = group_box(src, context);
  const BoundingBox b = group_box(dst, context);
  const double size = std::max({a.width(), a.height(), 1e-9});
  const double dx = (b.center_x() - a.center_x()) / size;
  const double dy = (b.center_y() - a.center_y()) / size;
  const double hb = std::max(b.height(), 1e-9), ha = std::max(a.height(), 1e-9);
  return {std::tanh(dx), std::tanh(dy), std::clamp(std::log(hb / ha), -3.0, 3.0) / 3.0};
}

void BaselineScorer::fit(const std::vector<Sample>& corpus) {
  std::map<std::string, std::pair<std::vector<double>, int>> sym, rel;
  auto accumulate = [](auto& acc, const std::string& label, const std::vector<double>& f) {
    auto& [sum, count] = acc[label];
    if (sum.empty()) sum.assign(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) sum[i] += f[i];
    ++count;
  };
  for (const auto& sample : corpus) {
    for (const auto& s : sample.truth.symbols) accumulate(sym, s.label, symbol_features(s.stroke_ids, sample.strokes));
    for (const auto& r : sample.truth.relations)
      accumulate(rel, r.label,
                 relation_features(sample.truth.symbols[r.src_symbol].stroke_ids,
                                   sample.truth.symbols[r.dst_symbol].stroke_ids, sample.strokes));
  }
  if (sym.empty()) fail(ErrorKind::data, "baseline scorer needs at least one annotated symbol");
  symbol_centroids_.clear();
  relation_centroids_.clear();
  for (auto& [label, acc] : sym) {
    for (auto& x : acc.first) x /= acc.second;
    symbol_centroids_[label] = acc.first;
  }
  for (auto& [label, acc] : rel) {
    for (auto& x : acc.first) x /= acc.second;
    relation_centroids_[label] = acc.first;
  }
}

Distribution BaselineScorer::score_symbol(const std::vector<int>& stroke_ids, const StrokeSet& context) const {
  if (!fitted()) fail(ErrorKind::state, "baseline scorer used before fit");
  return softmax_with_floor(symbol_centroids_, symbol_features(stroke_ids, context));
}

Distribution BaselineScorer::score_relation(const SymbolHypothesis& src, const SymbolHypothesis& dst,
                                            const StrokeSet& context) const {
  if (!fitted()) fail(ErrorKind::state, "baseline scorer used before fit");
  if (relation_centroids_.empty()) return {{std::string(kJunkLabel), 1.0}};
  return softmax_with_floor(relation_centroids_, relation_features(src.stroke_ids, dst.stroke_ids, context));
}

}  // namespace inkgraph
