// Fixtures and brute-force oracles shared by the test binaries. Nothing here
// calls into the parser or the cost tables; the oracles are written from the
// definitions so they can be compared against the library.
#pragma once

#include "inkgraph/error.hpp"
#include "inkgraph/forest.hpp"
#include "inkgraph/grammar.hpp"
#include "inkgraph/hypotheses.hpp"
#include "inkgraph/parser.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef INKGRAPH_DATA_DIR
#define INKGRAPH_DATA_DIR "data"
#endif

namespace support {

using namespace inkgraph;

inline std::string data_path(const std::string& rel) { return std::string(INKGRAPH_DATA_DIR) + "/" + rel; }

inline const GraphicGrammar& math_grammar() {
  static const GraphicGrammar g = load_grammar(data_path("grammars/math.xml"));
  return g;
}

inline const GraphicGrammar& flowchart_grammar() {
  static const GraphicGrammar g = load_grammar(data_path("grammars/flowchart.xml"));
  return g;
}

struct V {
  std::vector<int> strokes;
  std::vector<LabelScore> labels;
};
struct E {
  int src, dst;
  std::vector<LabelScore> labels;
};

inline HypothesesGraph make_h(const std::vector<V>& vs, const std::vector<E>& es) {
  HypothesesGraph h;
  std::set<int> universe;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    SymbolHypothesis v;
    v.id = static_cast<int>(i);
    v.stroke_ids = vs[i].strokes;
    std::sort(v.stroke_ids.begin(), v.stroke_ids.end());
    v.labels = vs[i].labels;
    universe.insert(v.stroke_ids.begin(), v.stroke_ids.end());
    h.vertices.push_back(v);
  }
  for (const auto& e : es) h.edges.push_back({e.src, e.dst, e.labels, 0.0});
  h.stroke_universe.assign(universe.begin(), universe.end());
  h.validate();
  return h;
}

inline std::string strokes_text(const std::vector<int>& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "}";
}

// ---------------------------------------------------------------------------
// Label pruning cases worked out by hand. Dyadic scores keep every prefix sum
// exact, so "strictly exceeds" is never decided by rounding.

struct PruneCase {
  std::vector<LabelScore> scores;
  double tr;
  std::optional<std::vector<std::string>> kept;  // nullopt: rejected
};

inline std::vector<PruneCase> prune_cases() {
  using L = std::vector<LabelScore>;
  using K = std::vector<std::string>;
  const L quarters{{"a", .5}, {"b", .25}, {"c", .125}, {"d", .125}};
  const L junk_top{{"junk", .5}, {"a", .25}, {"b", .25}};
  return {
      {{{"a", .5}, {"b", .3}, {"c", .2}}, .7, K{"a", "b"}},
      {{{"junk", .9}, {"a", .1}}, .7, std::nullopt},
      {{{"a", 1.0}}, .5, K{"a"}},
      {quarters, .4, K{"a"}},
      {quarters, .5, K{"a", "b"}},
      {quarters, .75, K{"a", "b", "c"}},
      {quarters, .9, K{"a", "b", "c", "d"}},
      {quarters, 1.0, K{"a", "b", "c", "d"}},
      {junk_top, .4, std::nullopt},
      {junk_top, .5, K{"a"}},
      {junk_top, .75, K{"a", "b"}},
      {{{"a", .5}, {"junk", .25}, {"b", .25}}, .6, K{"a"}},
      {{{"junk", 1.0}}, 1.0, std::nullopt},
      {{{"a", .25}, {"b", .25}, {"c", .25}, {"d", .25}}, .5, K{"a", "b", "c"}},
      {{{"a", .5}, {"b", .5}, {"c", 0.0}}, 1.0, K{"a", "b"}},
      {{{"junk", .625}, {"a", .375}}, .5, std::nullopt},
      {{{"junk", .625}, {"a", .375}}, .625, K{"a"}},
      {{}, .5, std::nullopt},
  };
}

// ---------------------------------------------------------------------------
// "P^b4" ambiguity: stroke 0 is P or p, stroke 1 is b above or beside it,
// strokes 2 and 3 are "<" and "1" alone or "4"/"y" together.

struct Fig6Scores {
  double P = .6, p = .35, b = .9, lt = .5, one = .5, four = .8, y = .15;
  double sp = .6, h = .35, b_to_4 = .9, P_to_lt = .3, lt_to_1 = .8;
};

// Scores under which "P^b < 1" is the best reading.
inline Fig6Scores fig6_lt_scores() {
  Fig6Scores s;
  s.four = .1;
  s.y = .05;
  s.lt = .9;
  s.one = .9;
  s.P_to_lt = .7;
  return s;
}

inline HypothesesGraph fig6_h(const Fig6Scores& s = {}) {
  auto sorted = [](std::vector<LabelScore> l) {
    sort_descending(l);
    return l;
  };
  return make_h({{{0}, sorted({{"P", s.P}, {"p", s.p}})},
                 {{1}, {{"b", s.b}}},
                 {{2}, {{"<", s.lt}}},
                 {{3}, {{"1", s.one}}},
                 {{2, 3}, sorted({{"4", s.four}, {"y", s.y}})}},
                {{0, 1, sorted({{"sp", s.sp}, {"h", s.h}})},
                 {1, 4, {{"h", s.b_to_4}}},
                 {0, 2, {{"h", s.P_to_lt}}},
                 {2, 3, {{"h", s.lt_to_1}}}});
}

inline const std::string fig6_pb4 = "r-2(r-4(r-52[P{0}],r-3(r-12[b{1}],r-6(r-67[4{2,3}]))))";
inline const std::string fig6_pb_lt_1 = "r-1(r-4(r-52[P{0}],r-6(r-12[b{1}])),r-9[<{2}],r-2(r-6(r-64[1{3}])))";

// ---------------------------------------------------------------------------
// Brute-force parsing: all derivation trees of (S, NT) over every k-way
// assignment of strokes to rhs vertices, with the same H constraints the
// parser is specified against.

class BruteForceParser {
public:
  BruteForceParser(const GraphicGrammar& g, const HypothesesGraph& h) : g_(g), h_(h) {}

  std::vector<std::string> trees() { return parse(h_.stroke_universe, g_.initial); }

  bool backed(const std::vector<int>& part) const {
    std::vector<int> chosen;
    return cover(part, std::set<int>(part.begin(), part.end()), chosen);
  }

private:
  static bool subset(const std::vector<int>& a, const std::set<int>& b) {
    return std::all_of(a.begin(), a.end(), [&](int x) { return b.count(x) != 0; });
  }

  bool connected(const std::vector<int>& vs) const {
    std::set<int> seen{vs.front()};
    std::vector<int> stack{vs.front()};
    const std::set<int> in(vs.begin(), vs.end());
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& e : h_.edges) {
        int w = -1;
        if (e.src == u) w = e.dst;
        if (e.dst == u) w = e.src;
        if (w >= 0 && in.count(w) && seen.insert(w).second) stack.push_back(w);
      }
    }
    return seen.size() == in.size();
  }

  // Exact cover of `left` by disjoint H vertices that form a connected subgraph.
  bool cover(const std::vector<int>& part, std::set<int> left, std::vector<int>& chosen) const {
    if (left.empty()) return connected(chosen);
    const int first = *left.begin();
    for (const auto& v : h_.vertices) {
      if (!std::count(v.stroke_ids.begin(), v.stroke_ids.end(), first) || !subset(v.stroke_ids, left)) continue;
      auto rest = left;
      for (int s : v.stroke_ids) rest.erase(s);
      chosen.push_back(v.id);
      if (cover(part, rest, chosen)) return true;
      chosen.pop_back();
    }
    return false;
  }

  bool related(const std::vector<int>& a, const std::vector<int>& b, const std::string& label) const {
    const std::set<int> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    for (const auto& e : h_.edges) {
      if (!subset(h_.vertices[e.src].stroke_ids, sa) || !subset(h_.vertices[e.dst].stroke_ids, sb)) continue;
      for (const auto& l : e.labels)
        if (l.label == label) return true;
    }
    return false;
  }

  const std::vector<std::string>& parse(const std::vector<int>& s, const std::string& nt) {
    const auto key = std::make_pair(s, nt);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<std::string> out;
    for (const auto& rule : g_.rules) {
      if (rule.lhs != nt) continue;
      const auto& rhs = rule.rhs;
      if (rule.kind == RuleKind::terminal) {
        const std::string& t = rhs.vertices[0].label;
        for (const auto& v : h_.vertices)
          if (v.stroke_ids == s)
            for (const auto& l : v.labels)
              if (l.label == t) out.push_back(rule.id + "[" + t + strokes_text(s) + "]");
        continue;
      }
      const std::size_t k = rhs.vertices.size();
      if (k == 1) {
        for (const auto& c : parse(s, rhs.vertices[0].label)) out.push_back(rule.id + "(" + c + ")");
        continue;
      }
      if (s.size() < k) continue;
      std::vector<std::size_t> pick(s.size(), 0);
      while (true) {
        std::vector<std::vector<int>> parts(k);
        for (std::size_t i = 0; i < s.size(); ++i) parts[pick[i]].push_back(s[i]);
        bool ok = std::none_of(parts.begin(), parts.end(), [](const auto& p) { return p.empty(); });
        for (std::size_t i = 0; ok && i < k; ++i) ok = backed(parts[i]);
        for (const auto& e : rhs.edges) {
          if (!ok) break;
          ok = related(parts[rhs.position(e.src)], parts[rhs.position(e.dst)], e.label);
        }
        if (ok) {
          std::vector<std::vector<std::string>> sub;
          for (std::size_t i = 0; i < k; ++i) sub.push_back(parse(parts[i], rhs.vertices[i].label));
          std::vector<std::size_t> at(k, 0);
          if (std::none_of(sub.begin(), sub.end(), [](const auto& x) { return x.empty(); })) {
            while (true) {
              std::string t = rule.id + "(";
              for (std::size_t i = 0; i < k; ++i) t += (i ? "," : "") + sub[i][at[i]];
              out.push_back(t + ")");
              std::size_t i = 0;
              while (i < k && ++at[i] == sub[i].size()) at[i++] = 0;
              if (i == k) break;
            }
          }
        }
        std::size_t i = 0;
        while (i < s.size() && ++pick[i] == k) pick[i++] = 0;
        if (i == s.size()) break;
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return memo_[key] = out;
  }

  const GraphicGrammar& g_;
  const HypothesesGraph& h_;
  std::map<std::pair<std::vector<int>, std::string>, std::vector<std::string>> memo_;
};

// ---------------------------------------------------------------------------
// Explicit trees of a forest, scored directly from the definition of J.

struct FullTree {
  std::string canon;
  double J_s = 0.0, J_r = 0.0;
  int n_s = 0, n_r = 0;
  double J = 0.0;
};

inline double cost_of(double j_s, double j_r, int n_s, int n_r, double alpha) {
  return alpha / n_s * j_s + (n_r ? (1.0 - alpha) / n_r * j_r : 0.0);
}

inline double nlog(double s) { return -std::log(std::max(s, 1e-12)); }

/// Every tree spanned from each node. `keep` decides per node which of the
/// node's trees are passed upward (identity for plain enumeration).
inline std::vector<std::vector<FullTree>> spanned_trees(
    const ParseForest& f, double alpha,
    const std::function<std::vector<FullTree>(std::vector<FullTree>)>& keep = nullptr) {
  std::vector<std::vector<FullTree>> at(f.nodes.size());
  for (std::size_t x = 0; x < f.nodes.size(); ++x) {
    std::vector<FullTree> all;
    for (const auto& d : f.nodes[x].derivations) {
      if (d.terminal) {
        FullTree t;
        t.canon = d.rule_id + "[" + d.terminal->label + strokes_text(f.nodes[x].stroke_ids) + "]";
        t.J_s = nlog(d.terminal->score);
        t.n_s = 1;
        t.J = cost_of(t.J_s, 0, 1, 0, alpha);
        all.push_back(t);
        continue;
      }
      std::vector<FullTree> partial{FullTree{}};
      for (const auto& e : d.edges) {
        partial[0].J_r += nlog(e.score);
        partial[0].n_r += 1;
      }
      for (std::size_t i = 0; i < d.children.size(); ++i) {
        std::vector<FullTree> next;
        for (const auto& p : partial)
          for (const auto& c : at[d.children[i]]) {
            FullTree t = p;
            t.canon += (i ? "," : "") + c.canon;
            t.J_s += c.J_s;
            t.J_r += c.J_r;
            t.n_s += c.n_s;
            t.n_r += c.n_r;
            next.push_back(t);
          }
        partial = std::move(next);
      }
      for (auto& t : partial) {
        t.canon = d.rule_id + "(" + t.canon + ")";
        t.J = cost_of(t.J_s, t.J_r, t.n_s, t.n_r, alpha);
        all.push_back(t);
      }
    }
    at[x] = keep ? keep(std::move(all)) : std::move(all);
  }
  return at;
}

/// Relative-cost rule applied to one node's trees; ties with the minimum survive.
inline std::vector<FullTree> relative_prune(std::vector<FullTree> trees, double t_pr) {
  if (trees.empty()) return trees;
  double min = trees[0].J;
  for (const auto& t : trees) min = std::min(min, t.J);
  std::vector<FullTree> kept;
  for (const auto& t : trees)
    if (std::fabs(t.J - min) < t_pr * min || std::fabs(t.J - min) <= 1e-12 * std::max(1.0, min)) kept.push_back(t);
  return kept;
}

inline std::size_t tree_count(const ParseForest& f) {
  if (f.empty()) return 0;
  std::vector<double> n(f.nodes.size(), 0.0);
  for (std::size_t x = 0; x < f.nodes.size(); ++x)
    for (const auto& d : f.nodes[x].derivations) {
      double p = 1.0;
      for (int c : d.children) p *= n[c];
      n[x] += p;
    }
  return static_cast<std::size_t>(std::min(n[f.root], 1e18));
}

// ---------------------------------------------------------------------------
// Random small grammars and hypotheses graphs.

struct RandomCase {
  GraphicGrammar grammar;
  HypothesesGraph h;
};

inline std::vector<LabelScore> random_labels(std::mt19937_64& rng, const std::vector<std::string>& pool, int max_n) {
  std::vector<std::string> names = pool;
  std::shuffle(names.begin(), names.end(), rng);
  std::uniform_int_distribution<int> count(1, std::min<int>(max_n, static_cast<int>(names.size())));
  std::uniform_real_distribution<double> score(0.05, 1.0);
  std::vector<LabelScore> out;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) out.push_back({names[i], score(rng)});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

/// Grammar over N = {S, A, B}, T = {x, y, z}, RL = {r, s} whose nonterminal
/// rules have 2 or 3 vertices; regenerated until it validates.
inline GraphicGrammar random_grammar(std::mt19937_64& rng) {
  const std::vector<std::string> nts{"S", "A", "B"}, ts{"x", "y", "z"}, rels{"r", "s"};
  std::uniform_int_distribution<int> pick_nt(0, 2), pick_t(0, 2), pick_rel(0, 1), coin(0, 1);
  while (true) {
    GraphicGrammar g;
    g.nonterminals = {nts.begin(), nts.end()};
    g.terminals = {ts.begin(), ts.end()};
    g.relation_labels = {rels.begin(), rels.end()};
    g.initial = "S";
    g.embedding = EmbeddingKind::min_relation_cost;
    int id = 0;
    for (const auto& nt : nts) {
      const int terminal_rules = 1 + coin(rng);
      for (int i = 0; i < terminal_rules; ++i) {
        Production p;
        p.id = "t" + std::to_string(id++);
        p.lhs = nt;
        p.rhs.vertices.push_back({0, ts[pick_t(rng)]});
        g.rules.push_back(p);
      }
      const int nonterminal_rules = 1 + coin(rng);
      for (int i = 0; i < nonterminal_rules; ++i) {
        Production p;
        p.id = "n" + std::to_string(id++);
        p.lhs = nt;
        const int k = 2 + coin(rng);
        for (int v = 0; v < k; ++v) p.rhs.vertices.push_back({v, nts[pick_nt(rng)]});
        for (int v = 1; v < k; ++v) {
          const int other = std::uniform_int_distribution<int>(0, v - 1)(rng);
          if (coin(rng))
            p.rhs.edges.push_back({other, v, rels[pick_rel(rng)]});
          else
            p.rhs.edges.push_back({v, other, rels[pick_rel(rng)]});
        }
        g.rules.push_back(p);
      }
    }
    try {
      g.finalize();
      return g;
    } catch (const Error&) {
    }
  }
}

/// Up to `max_strokes` strokes; every singleton is a vertex plus a few random
/// multi-stroke groups, and random labeled edges between disjoint vertices.
inline HypothesesGraph random_h(std::mt19937_64& rng, int max_strokes, const std::vector<std::string>& symbols,
                                const std::vector<std::string>& relations, double edge_p = 0.5) {
  const int n = std::uniform_int_distribution<int>(1, max_strokes)(rng);
  std::vector<V> vs;
  std::set<std::vector<int>> seen;
  for (int i = 0; i < n; ++i) {
    vs.push_back({{i}, random_labels(rng, symbols, 2)});
    seen.insert({i});
  }
  const int extra = std::uniform_int_distribution<int>(0, n)(rng);
  for (int i = 0; i < extra && n > 1; ++i) {
    const int a = std::uniform_int_distribution<int>(0, n - 2)(rng);
    const int len = std::uniform_int_distribution<int>(2, std::min(3, n - a))(rng);
    std::vector<int> s;
    for (int j = 0; j < len; ++j) s.push_back(a + j);
    if (seen.insert(s).second) vs.push_back({s, random_labels(rng, symbols, 2)});
  }
  std::vector<E> es;
  std::bernoulli_distribution edge(edge_p);
  for (std::size_t a = 0; a < vs.size(); ++a)
    for (std::size_t b = 0; b < vs.size(); ++b) {
      if (a == b) continue;
      std::vector<int> common;
      std::set_intersection(vs[a].strokes.begin(), vs[a].strokes.end(), vs[b].strokes.begin(), vs[b].strokes.end(),
                            std::back_inserter(common));
      if (common.empty() && edge(rng))
        es.push_back({static_cast<int>(a), static_cast<int>(b), random_labels(rng, relations, 2)});
    }
  return make_h(vs, es);
}

}  // namespace support
