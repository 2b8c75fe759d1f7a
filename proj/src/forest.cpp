#include "inkgraph/forest.hpp"

#include "inkgraph/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace inkgraph {

namespace {
constexpr std::string_view kModule = "forest";

double neg_log(double score, double floor) { return -std::log(std::max(score, floor)); }

std::string strokes_text(const std::vector<int>& ids) {
  std::string out = "{";
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? "," : "") + std::to_string(ids[i]);
  return out + "}";
}
}  // namespace

double tree_cost(double j_s, double j_r, int n_s, int n_r, double alpha) {
  double j = n_s > 0 ? alpha / n_s * j_s : 0.0;
  if (n_r > 0) j += (1.0 - alpha) / n_r * j_r;
  return j;
}

std::vector<CostRow> prune_rows(std::vector<CostRow> candidates, double t_pr) {
  if (candidates.empty()) return candidates;
  double min = std::numeric_limits<double>::infinity();
  for (const auto& r : candidates) min = std::min(min, r.J);
  const double tie = 1e-12 * std::max(1.0, std::abs(min));
  std::vector<CostRow> kept;
  for (auto& r : candidates) {
    const double d = std::abs(r.J - min);
    if (d <= tie || d < t_pr * min) kept.push_back(std::move(r));
  }
  std::sort(kept.begin(), kept.end(), [](const CostRow& a, const CostRow& b) {
    if (a.J != b.J) return a.J < b.J;
    return a.canon < b.canon;
  });
  return kept;
}

CostTables build_nbest_tables(const ParseForest& forest, const CostParams& p) {
  if (p.alpha < 0.0 || p.alpha > 1.0) throw Error(ErrorKind::argument, kModule, "alpha must lie in [0,1]");
  if (p.t_pr < 0.0 || p.t_pr > 1.0) throw Error(ErrorKind::argument, kModule, "t_pr must lie in [0,1]");
  if (!(p.score_floor > 0.0)) throw Error(ErrorKind::argument, kModule, "score_floor must be positive");
  CostTables tables(forest.nodes.size());
  // Children always precede their parents in the node list.
  for (std::size_t x = 0; x < forest.nodes.size(); ++x) {
    const auto& node = forest.nodes[x];
    // Row count is known before enumerating; refuse oversized products up front.
    double rows = 0.0;
    for (const auto& d : node.derivations) {
      double prod = 1.0;
      for (int c : d.children)
        if (c >= 0 && static_cast<std::size_t>(c) < x) prod *= static_cast<double>(tables[c].size());
      rows += prod;
    }
    if (rows > static_cast<double>(p.max_candidates))
      throw BudgetError(kModule, "n-best table cross product exceeded its budget",
                        static_cast<std::size_t>(std::min(rows, 1e18)));
    for (const auto& d : node.derivations)
      for (int c : d.children)
        if (c < 0 || static_cast<std::size_t>(c) >= x)
          throw Error(ErrorKind::state, kModule, "forest nodes are not in topological order");

    // Visits every candidate row of derivation di without storing it.
    auto each_row = [&](std::size_t di, auto&& fn) {
      const auto& d = node.derivations[di];
      if (d.terminal) {
        const double js = neg_log(d.terminal->score, p.score_floor);
        fn(js, 0.0, 1, 0, nullptr);
        return;
      }
      double local_r = 0.0;
      for (const auto& e : d.edges) local_r += neg_log(e.score, p.score_floor);
      const std::size_t k = d.children.size();
      std::vector<int> pick(k, 0);
      while (true) {
        double js = 0.0, jr = local_r;
        int ns = 0, nr = static_cast<int>(d.edges.size());
        for (std::size_t i = 0; i < k; ++i) {
          const CostRow& child = tables[d.children[i]][pick[i]];
          js += child.J_s;
          jr += child.J_r;
          ns += child.n_s;
          nr += child.n_r;
        }
        fn(js, jr, ns, nr, &pick);
        std::size_t i = 0;
        while (i < k && ++pick[i] == static_cast<int>(tables[d.children[i]].size())) pick[i++] = 0;
        if (i == k) break;
      }
    };

    // Two passes: the minimum first, then only the rows that survive it.
    double min = std::numeric_limits<double>::infinity();
    for (std::size_t di = 0; di < node.derivations.size(); ++di)
      each_row(di, [&](double js, double jr, int ns, int nr, const std::vector<int>*) {
        min = std::min(min, tree_cost(js, jr, ns, nr, p.alpha));
      });
    const double tie = 1e-12 * std::max(1.0, std::abs(min));
    std::vector<CostRow> candidates;
    for (std::size_t di = 0; di < node.derivations.size(); ++di) {
      const auto& d = node.derivations[di];
      each_row(di, [&](double js, double jr, int ns, int nr, const std::vector<int>* pick) {
        const double J = tree_cost(js, jr, ns, nr, p.alpha);
        const double gap = std::abs(J - min);
        if (!(gap <= tie || gap < p.t_pr * min)) return;
        CostRow r;
        r.J = J;
        r.J_s = js;
        r.J_r = jr;
        r.n_s = ns;
        r.n_r = nr;
        r.derivation = static_cast<int>(di);
        if (d.terminal) {
          r.canon = d.rule_id + "[" + d.terminal->label + strokes_text(node.stroke_ids) + "]";
        } else {
          r.child_rows = *pick;
          r.canon = d.rule_id + "(";
          for (std::size_t i = 0; i < d.children.size(); ++i)
            r.canon += (i ? "," : "") + tables[d.children[i]][r.child_rows[i]].canon;
          r.canon += ")";
        }
        candidates.push_back(std::move(r));
      });
    }
    tables[x] = prune_rows(std::move(candidates), p.t_pr);
  }
  return tables;
}

// ---------------------------------------------------------------------------

double symbol_cost(const TreeNode& node, double floor) {
  if (node.terminal) return neg_log(node.terminal->score, floor);
  double j = 0.0;
  for (const auto& c : node.children) j += symbol_cost(c, floor);
  return j;
}

double relation_cost(const TreeNode& node, double floor) {
  double j = 0.0;
  for (const auto& e : node.edges) j += neg_log(e.score, floor);
  for (const auto& c : node.children) j += relation_cost(c, floor);
  return j;
}

int symbol_count(const TreeNode& node) {
  if (node.terminal) return 1;
  int n = 0;
  for (const auto& c : node.children) n += symbol_count(c);
  return n;
}

int relation_count(const TreeNode& node) {
  int n = static_cast<int>(node.edges.size());
  for (const auto& c : node.children) n += relation_count(c);
  return n;
}

namespace {
TreeNode reconstruct(const ParseForest& forest, const CostTables& tables, int x, int row_index) {
  const ForestNode& node = forest.nodes[x];
  const CostRow& row = tables[x][row_index];
  const ForestDerivation& d = node.derivations[row.derivation];
  TreeNode t;
  t.node = x;
  t.derivation = row.derivation;
  t.rule_id = d.rule_id;
  t.nonterminal = node.nonterminal;
  t.stroke_ids = node.stroke_ids;
  t.terminal = d.terminal;
  t.edges = d.edges;
  for (std::size_t i = 0; i < d.children.size(); ++i)
    t.children.push_back(reconstruct(forest, tables, d.children[i], row.child_rows[i]));
  return t;
}
}  // namespace

std::vector<CostedTree> extract_trees(const ParseForest& forest, const CostTables& tables, std::size_t n) {
  std::vector<CostedTree> out;
  if (forest.empty()) return out;
  const auto& root = tables.at(forest.root);
  for (std::size_t i = 0; i < std::min(n, root.size()); ++i) {
    CostedTree t;
    t.root = reconstruct(forest, tables, forest.root, static_cast<int>(i));
    t.J = root[i].J;
    t.J_s = root[i].J_s;
    t.J_r = root[i].J_r;
    t.n_s = root[i].n_s;
    t.n_r = root[i].n_r;
    t.canon = root[i].canon;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<CostedTree> extract_trees(const ParseForest& forest, const CostParams& params, std::size_t n) {
  return extract_trees(forest, build_nbest_tables(forest, params), n);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

void collect_terminals(const TreeNode& t, std::vector<const TreeNode*>& out) {
  if (t.terminal) {
    out.push_back(&t);
    return;
  }
  for (const auto& c : t.children) collect_terminals(c, out);
}

/// First (or last) baseline terminal hypothesis of a subtree.
int baseline_end(const TreeNode& t, const GraphicGrammar& g, bool first) {
  if (t.terminal) return t.terminal->hyp;
  const Production& rule = g.rule(t.rule_id);
  const int pos = first ? rule.baseline_first : rule.baseline_last;
  if (pos < 0 || static_cast<std::size_t>(pos) >= t.children.size()) return -1;
  return baseline_end(t.children[pos], g, first);
}

struct Resolver {
  const GraphicGrammar& g;
  const HypothesesGraph& h;
  Interpretation& out;
  std::map<int, int> symbol_of_hyp;

  void walk(const TreeNode& t) {
    for (const auto& c : t.children) walk(c);
    for (const auto& e : t.edges) {
      std::vector<const TreeNode*> src_terms, dst_terms;
      collect_terminals(t.children[e.src], src_terms);
      collect_terminals(t.children[e.dst], dst_terms);
      std::set<int> src_hyps, dst_hyps;
      for (auto* n : src_terms) src_hyps.insert(n->terminal->hyp);
      for (auto* n : dst_terms) dst_hyps.insert(n->terminal->hyp);
      const Realizer* chosen = nullptr;
      if (g.embedding == EmbeddingKind::baseline_chain) {
        const int a = baseline_end(t.children[e.src], g, false);
        const int b = baseline_end(t.children[e.dst], g, true);
        for (const auto& r : e.realizers)
          if (r.src_hyp == a && r.dst_hyp == b) {
            chosen = &r;
            break;
          }
      }
      if (!chosen)
        for (const auto& r : e.realizers)
          if (src_hyps.count(r.src_hyp) && dst_hyps.count(r.dst_hyp)) {
            chosen = &r;
            break;
          }
      if (!chosen && !e.realizers.empty()) chosen = &e.realizers.front();
      if (!chosen) throw Error(ErrorKind::state, kModule, "instantiated edge without a hypotheses edge");
      OutputRelation rel;
      rel.src = h.vertices.at(chosen->src_hyp).stroke_ids;
      rel.dst = h.vertices.at(chosen->dst_hyp).stroke_ids;
      rel.label = e.label;
      rel.score = chosen->score;
      auto si = symbol_of_hyp.find(chosen->src_hyp);
      auto di = symbol_of_hyp.find(chosen->dst_hyp);
      rel.src_symbol = si == symbol_of_hyp.end() ? -1 : si->second;
      rel.dst_symbol = di == symbol_of_hyp.end() ? -1 : di->second;
      out.relations.push_back(std::move(rel));
    }
  }
};

}  // namespace

std::string render_text(const TreeNode& node, const GraphicGrammar& g) {
  const Production& rule = g.rule(node.rule_id);
  if (node.terminal) return rule.render_template.value_or(node.terminal->label);
  if (!rule.render_template)
    throw Error(ErrorKind::rendering, kModule, "rule " + rule.id + " has no output template");
  const std::string& tpl = *rule.render_template;
  std::string out;
  for (std::size_t i = 0; i < tpl.size(); ++i) {
    if (tpl[i] == '$' && i + 1 < tpl.size() && std::isdigit(static_cast<unsigned char>(tpl[i + 1]))) {
      std::size_t j = i + 1;
      int slot = 0;
      while (j < tpl.size() && std::isdigit(static_cast<unsigned char>(tpl[j]))) slot = slot * 10 + (tpl[j++] - '0');
      if (slot >= static_cast<int>(node.children.size()))
        throw Error(ErrorKind::rendering, kModule, "rule " + rule.id + " template uses missing slot $" + std::to_string(slot));
      out += render_text(node.children[slot], g);
      i = j - 1;
    } else {
      out += tpl[i];
    }
  }
  return out;
}

Interpretation render(const CostedTree& tree, const GraphicGrammar& g, const HypothesesGraph& h, bool with_text) {
  Interpretation out;
  std::vector<const TreeNode*> terms;
  collect_terminals(tree.root, terms);
  std::sort(terms.begin(), terms.end(), [](const TreeNode* a, const TreeNode* b) { return a->stroke_ids < b->stroke_ids; });
  Resolver resolver{g, h, out, {}};
  for (const auto* t : terms) {
    resolver.symbol_of_hyp[t->terminal->hyp] = static_cast<int>(out.symbols.size());
    out.symbols.push_back({t->terminal->label, t->stroke_ids, t->terminal->score, t->terminal->hyp});
    out.graph.vertices.push_back({static_cast<int>(out.graph.vertices.size()), t->terminal->label});
  }
  resolver.walk(tree.root);
  std::sort(out.relations.begin(), out.relations.end(), [](const OutputRelation& a, const OutputRelation& b) {
    return std::tie(a.src, a.dst, a.label) < std::tie(b.src, b.dst, b.label);
  });
  for (const auto& r : out.relations)
    if (r.src_symbol >= 0 && r.dst_symbol >= 0) {
      LabeledGraph::Edge e{r.src_symbol, r.dst_symbol, r.label};
      if (std::find(out.graph.edges.begin(), out.graph.edges.end(), e) == out.graph.edges.end())
        out.graph.edges.push_back(e);
    }
  if (with_text) out.text = render_text(tree.root, g);
  return out;
}

}  // namespace inkgraph
