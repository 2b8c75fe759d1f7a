#include "inkgraph/grammar.hpp"

#include "inkgraph/error.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

namespace inkgraph {

namespace {

constexpr std::string_view kModule = "grammar";

[[noreturn]] void fail(ErrorKind kind, const std::string& what) { throw Error(kind, kModule, what); }

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(EmbeddingKind kind) {
  return kind == EmbeddingKind::baseline_chain ? "baseline_chain" : "min_relation_cost";
}

// ---------------------------------------------------------------------------
// LabeledGraph

const LabeledGraph::Vertex* LabeledGraph::find(int id) const {
  for (const auto& v : vertices)
    if (v.id == id) return &v;
  return nullptr;
}

int LabeledGraph::position(int id) const {
  for (std::size_t i = 0; i < vertices.size(); ++i)
    if (vertices[i].id == id) return static_cast<int>(i);
  return -1;
}

int LabeledGraph::max_id() const {
  int out = -1;
  for (const auto& v : vertices) out = std::max(out, v.id);
  return out;
}

bool LabeledGraph::is_connected() const {
  if (vertices.empty()) return true;
  std::vector<int> parent(vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : edges) {
    const int a = position(e.src), b = position(e.dst);
    if (a < 0 || b < 0) continue;
    parent[root(a)] = root(b);
  }
  const int r = root(0);
  for (std::size_t i = 1; i < vertices.size(); ++i)
    if (root(static_cast<int>(i)) != r) return false;
  return true;
}

void LabeledGraph::validate() const {
  std::set<int> ids;
  for (const auto& v : vertices)
    if (!ids.insert(v.id).second) fail(ErrorKind::validation, "duplicate vertex id " + std::to_string(v.id));
  std::set<std::tuple<int, int, std::string>> seen;
  for (const auto& e : edges) {
    if (!ids.count(e.src) || !ids.count(e.dst))
      fail(ErrorKind::validation,
           "edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) + " references a missing vertex");
    if (e.src == e.dst) fail(ErrorKind::validation, "self loop on vertex " + std::to_string(e.src));
    if (!seen.emplace(e.src, e.dst, e.label).second)
      fail(ErrorKind::validation, "duplicate edge " + std::to_string(e.src) + "->" + std::to_string(e.dst));
  }
}

std::string LabeledGraph::serialize() const {
  auto vs = vertices;
  std::sort(vs.begin(), vs.end(), [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
  auto es = edges;
  std::sort(es.begin(), es.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst, a.label) < std::tie(b.src, b.dst, b.label);
  });
  std::ostringstream out;
  for (const auto& v : vs) out << "vertex " << v.id << ' ' << v.label << '\n';
  for (const auto& e : es) out << "edge " << e.src << ' ' << e.dst << ' ' << e.label << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Baselines

std::pair<int, int> dominant_baseline(const LabeledGraph& rhs, const std::string& horizontal_label) {
  const int n = static_cast<int>(rhs.vertices.size());
  if (n == 0) fail(ErrorKind::embedding, "empty right-hand side has no baseline");
  std::vector<int> next(n, -1), prev(n, -1);
  std::vector<bool> has_incoming(n, false);
  for (const auto& e : rhs.edges) {
    const int a = rhs.position(e.src), b = rhs.position(e.dst);
    has_incoming[b] = true;
    if (e.label != horizontal_label) continue;
    if (next[a] != -1 || prev[b] != -1)
      fail(ErrorKind::embedding, "vertex with two horizontal edges on the same side; baselines are not paths");
    next[a] = b;
    prev[b] = a;
  }
  std::vector<std::pair<int, int>> dominant;
  std::vector<bool> visited(n, false);
  for (int start = 0; start < n; ++start) {
    if (prev[start] != -1) continue;
    int last = start;
    visited[start] = true;
    while (next[last] != -1) {
      last = next[last];
      visited[last] = true;
    }
    // A baseline is nested when some edge enters its first vertex.
    if (!has_incoming[start]) dominant.emplace_back(start, last);
  }
  if (std::find(visited.begin(), visited.end(), false) != visited.end())
    fail(ErrorKind::embedding, "horizontal edges form a cycle");
  if (dominant.empty()) fail(ErrorKind::embedding, "no dominant baseline");
  if (dominant.size() > 1) fail(ErrorKind::embedding, "ambiguous dominant baseline");
  return dominant.front();
}

// ---------------------------------------------------------------------------
// GraphicGrammar

const Production& GraphicGrammar::rule(const std::string& id) const {
  for (const auto& r : rules)
    if (r.id == id) return r;
  fail(ErrorKind::argument, "unknown rule '" + id + "'");
}

const std::vector<int>& GraphicGrammar::rules_for(const std::string& nonterminal) const {
  static const std::vector<int> none;
  auto it = by_lhs_.find(nonterminal);
  return it == by_lhs_.end() ? none : it->second;
}

bool GraphicGrammar::has_templates() const {
  return std::any_of(rules.begin(), rules.end(), [](const Production& r) { return r.render_template.has_value(); });
}

void GraphicGrammar::finalize() {
  std::vector<std::string> problems;

  for (const auto& t : terminals)
    if (nonterminals.count(t)) problems.push_back("'" + t + "' is both terminal and nonterminal");
  if (!nonterminals.count(initial)) problems.push_back("initial '" + initial + "' is not a nonterminal");

  std::set<std::string> ids;
  for (const auto& r : rules) {
    if (!ids.insert(r.id).second) problems.push_back("duplicate rule id '" + r.id + "'");
    if (!nonterminals.count(r.lhs)) problems.push_back("rule " + r.id + ": lhs '" + r.lhs + "' is not a nonterminal");
    if (r.rhs.vertices.empty()) {
      problems.push_back("rule " + r.id + ": empty rhs");
      continue;
    }
    try {
      r.rhs.validate();
    } catch (const Error& e) {
      problems.push_back("rule " + r.id + ": " + e.what());
      continue;
    }
    if (!r.rhs.is_connected()) problems.push_back("rule " + r.id + ": rhs not connected");
    for (const auto& v : r.rhs.vertices)
      if (!terminals.count(v.label) && !nonterminals.count(v.label))
        problems.push_back("rule " + r.id + ": unknown vertex label '" + v.label + "'");
    for (const auto& e : r.rhs.edges)
      if (!relation_labels.count(e.label))
        problems.push_back("rule " + r.id + ": unknown relation label '" + e.label + "'");
  }
  if (!problems.empty()) fail(ErrorKind::validation, join(problems, "; "));

  // Mixed right-hand sides: wrap each terminal vertex in a fresh nonterminal
  // so every rule is either a single terminal or all nonterminals.
  std::vector<Production> wrappers;
  std::set<std::string> wrapped;
  for (auto& r : rules) {
    const bool any_terminal = std::any_of(r.rhs.vertices.begin(), r.rhs.vertices.end(),
                                          [&](const auto& v) { return terminals.count(v.label) != 0; });
    if (!any_terminal) {
      r.kind = RuleKind::nonterminal;
      continue;
    }
    if (r.rhs.vertices.size() == 1) {
      r.kind = RuleKind::terminal;
      continue;
    }
    r.kind = RuleKind::nonterminal;
    for (auto& v : r.rhs.vertices) {
      if (!terminals.count(v.label)) continue;
      const std::string wrapper = "_" + v.label + "_";
      if (wrapped.insert(v.label).second) {
        if (nonterminals.count(wrapper) || terminals.count(wrapper))
          fail(ErrorKind::validation, "cannot normalize rule " + r.id + ": name '" + wrapper + "' is taken");
        Production w;
        w.id = "wrap:" + v.label;
        w.lhs = wrapper;
        w.rhs.vertices.push_back({0, v.label});
        w.kind = RuleKind::terminal;
        wrappers.push_back(std::move(w));
      }
      v.label = wrapper;
    }
  }
  for (auto& w : wrappers) {
    nonterminals.insert(w.lhs);
    rules.push_back(std::move(w));
  }

  by_lhs_.clear();
  for (std::size_t i = 0; i < rules.size(); ++i) by_lhs_[rules[i].lhs].push_back(static_cast<int>(i));

  // Productivity: fixed point over "every rhs label is productive".
  std::set<std::string> productive(terminals.begin(), terminals.end());
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : rules) {
      if (productive.count(r.lhs)) continue;
      if (std::all_of(r.rhs.vertices.begin(), r.rhs.vertices.end(),
                      [&](const auto& v) { return productive.count(v.label) != 0; })) {
        productive.insert(r.lhs);
        changed = true;
      }
    }
  }
  std::vector<std::string> unproductive;
  for (const auto& nt : nonterminals)
    if (!productive.count(nt)) unproductive.push_back(nt);
  if (!unproductive.empty()) problems.push_back("unproductive nonterminals: " + join(unproductive));

  std::set<std::string> reached{initial};
  std::vector<std::string> stack{initial};
  while (!stack.empty()) {
    const std::string a = stack.back();
    stack.pop_back();
    for (int ri : rules_for(a))
      for (const auto& v : rules[ri].rhs.vertices)
        if (nonterminals.count(v.label) && reached.insert(v.label).second) stack.push_back(v.label);
  }
  std::vector<std::string> unreachable;
  for (const auto& nt : nonterminals)
    if (!reached.count(nt)) unreachable.push_back(nt);
  if (!unreachable.empty()) problems.push_back("unreachable nonterminals: " + join(unreachable));

  // Unit-rule cycles would let the parser revisit (S, A) without consuming strokes.
  std::map<std::string, std::set<std::string>> unit;
  for (const auto& r : rules)
    if (r.kind == RuleKind::nonterminal && r.rhs.vertices.size() == 1) unit[r.lhs].insert(r.rhs.vertices[0].label);
  for (const auto& nt : nonterminals) {
    std::set<std::string> seen;
    std::vector<std::string> todo(unit[nt].begin(), unit[nt].end());
    while (!todo.empty()) {
      auto x = todo.back();
      todo.pop_back();
      if (x == nt) {
        problems.push_back("unit-rule cycle through '" + nt + "'");
        break;
      }
      if (!seen.insert(x).second) continue;
      for (const auto& y : unit[x]) todo.push_back(y);
    }
  }
  if (!problems.empty()) fail(ErrorKind::validation, join(problems, "; "));

  if (embedding == EmbeddingKind::baseline_chain) {
    for (auto& r : rules) {
      try {
        std::tie(r.baseline_first, r.baseline_last) = dominant_baseline(r.rhs, baseline_relation);
      } catch (const Error& e) {
        fail(ErrorKind::embedding, "rule " + r.id + ": " + e.what());
      }
    }
  }
}

// ---------------------------------------------------------------------------
// XML loading

namespace {

namespace pt = boost::property_tree;

void check_attributes(const pt::ptree& node, const std::string& element, std::initializer_list<std::string_view> allowed) {
  auto attrs = node.get_child_optional("<xmlattr>");
  if (!attrs) return;
  for (const auto& [name, _] : *attrs)
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
      fail(ErrorKind::parse, "unknown attribute '" + name + "' on <" + element + ">");
}

std::string required_attr(const pt::ptree& node, const std::string& element, const std::string& attr) {
  auto v = node.get_optional<std::string>("<xmlattr>." + attr);
  if (!v) fail(ErrorKind::parse, "<" + element + "> is missing attribute '" + attr + "'");
  return *v;
}

int int_attr(const pt::ptree& node, const std::string& element, const std::string& attr) {
  const std::string s = required_attr(node, element, attr);
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::parse, "<" + element + "> attribute '" + attr + "' is not an integer: '" + s + "'");
  }
}

template <typename F>
void for_children(const pt::ptree& node, const std::string& element, std::initializer_list<std::string_view> allowed,
                  F&& f) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end())
      fail(ErrorKind::parse, "unexpected element <" + name + "> inside <" + element + ">");
    f(name, child);
  }
}

}  // namespace

GraphicGrammar parse_grammar_xml(std::string_view text) {
  pt::ptree doc;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, doc);
  } catch (const pt::xml_parser_error& e) {
    fail(ErrorKind::parse, "malformed XML at line " + std::to_string(e.line()) + ": " + e.message());
  }
  auto root = doc.get_child_optional("grammar");
  if (!root) fail(ErrorKind::parse, "missing <grammar> root element");

  GraphicGrammar g;
  check_attributes(*root, "grammar", {"initial", "embedding", "baseline-relation", "name"});
  g.initial = required_attr(*root, "grammar", "initial");
  g.name = root->get("<xmlattr>.name", "");
  g.baseline_relation = root->get("<xmlattr>.baseline-relation", "h");
  const std::string embedding = root->get("<xmlattr>.embedding", "baseline_chain");
  if (embedding == "baseline_chain")
    g.embedding = EmbeddingKind::baseline_chain;
  else if (embedding == "min_relation_cost")
    g.embedding = EmbeddingKind::min_relation_cost;
  else
    fail(ErrorKind::parse, "unknown embedding '" + embedding + "'");

  std::set<std::string> declared_nonterminals;
  for_children(*root, "grammar", {"relations", "terminals", "nonterminals", "rule"}, [&](const std::string& name,
                                                                                           const pt::ptree& node) {
    if (name == "relations") {
      check_attributes(node, name, {});
      for_children(node, name, {"rel"}, [&](const std::string&, const pt::ptree& rel) {
        check_attributes(rel, "rel", {"name"});
        g.relation_labels.insert(required_attr(rel, "rel", "name"));
      });
    } else if (name == "terminals") {
      check_attributes(node, name, {});
      for_children(node, name, {"t"}, [&](const std::string&, const pt::ptree& t) {
        check_attributes(t, "t", {"name"});
        g.terminals.insert(required_attr(t, "t", "name"));
      });
    } else if (name == "nonterminals") {
      check_attributes(node, name, {});
      for_children(node, name, {"nt"}, [&](const std::string&, const pt::ptree& nt) {
        check_attributes(nt, "nt", {"name"});
        declared_nonterminals.insert(required_attr(nt, "nt", "name"));
      });
    } else {
      check_attributes(node, "rule", {"id", "lhs", "embedding-inherit"});
      Production r;
      r.id = required_attr(node, "rule", "id");
      r.lhs = required_attr(node, "rule", "lhs");
      if (auto inherit = node.get_optional<std::string>("<xmlattr>.embedding-inherit"); inherit && *inherit != "true")
        fail(ErrorKind::parse, "rule " + r.id + ": per-rule embeddings are not supported");
      for_children(node, "rule", {"vertex", "edge", "template"}, [&](const std::string& kind, const pt::ptree& item) {
        if (kind == "vertex") {
          check_attributes(item, kind, {"id", "label"});
          r.rhs.vertices.push_back({int_attr(item, kind, "id"), required_attr(item, kind, "label")});
        } else if (kind == "edge") {
          check_attributes(item, kind, {"src", "dst", "label"});
          r.rhs.edges.push_back(
              {int_attr(item, kind, "src"), int_attr(item, kind, "dst"), required_attr(item, kind, "label")});
        } else {
          check_attributes(item, kind, {});
          r.render_template = item.get_value<std::string>();
        }
      });
      g.rules.push_back(std::move(r));
    }
  });

  g.nonterminals = declared_nonterminals;
  for (const auto& r : g.rules) g.nonterminals.insert(r.lhs);
  g.nonterminals.insert(g.initial);
  g.finalize();
  return g;
}

GraphicGrammar load_grammar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_grammar_xml(buf.str());
}

// ---------------------------------------------------------------------------
// Size bounds and terminal reachability

SizeBounds compute_size_bounds(const GraphicGrammar& g) {
  constexpr int kInf = std::numeric_limits<int>::max();
  std::map<std::string, int> min_size;
  for (const auto& nt : g.nonterminals) min_size[nt] = kInf;
  auto label_min = [&](const std::string& label) { return g.is_terminal(label) ? 1 : min_size[label]; };
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& r : g.rules) {
      long long total = 0;
      for (const auto& v : r.rhs.vertices) total += label_min(v.label);
      if (total < min_size[r.lhs]) {
        min_size[r.lhs] = static_cast<int>(total);
        changed = true;
      }
    }
  }

  // A nonterminal is unbounded iff it reaches a nonterminal that lies on a
  // derivation cycle; unit cycles are rejected at load, so every cycle grows.
  std::map<std::string, std::set<std::string>> succ;
  for (const auto& r : g.rules)
    for (const auto& v : r.rhs.vertices)
      if (g.is_nonterminal(v.label)) succ[r.lhs].insert(v.label);
  auto reach_from = [&](const std::string& a) {
    std::set<std::string> seen;
    std::vector<std::string> todo(succ[a].begin(), succ[a].end());
    while (!todo.empty()) {
      auto x = todo.back();
      todo.pop_back();
      if (!seen.insert(x).second) continue;
      for (const auto& y : succ[x]) todo.push_back(y);
    }
    return seen;
  };
  std::set<std::string> on_cycle;
  std::map<std::string, std::set<std::string>> reach;
  for (const auto& nt : g.nonterminals) {
    reach[nt] = reach_from(nt);
    if (reach[nt].count(nt)) on_cycle.insert(nt);
  }

  SizeBounds bounds;
  std::map<std::string, int> max_memo;
  std::function<int(const std::string&)> max_of = [&](const std::string& a) -> int {
    if (auto it = max_memo.find(a); it != max_memo.end()) return it->second;
    int best = 0;
    for (int ri : g.rules_for(a)) {
      int total = 0;
      for (const auto& v : g.rules[ri].rhs.vertices) total += g.is_terminal(v.label) ? 1 : max_of(v.label);
      best = std::max(best, total);
    }
    return max_memo[a] = best;
  };
  for (const auto& nt : g.nonterminals) {
    SymbolRange range;
    range.min_symbols = min_size[nt];
    const bool unbounded = on_cycle.count(nt) ||
                           std::any_of(reach[nt].begin(), reach[nt].end(),
                                       [&](const std::string& x) { return on_cycle.count(x) != 0; });
    if (!unbounded) range.max_symbols = max_of(nt);
    bounds[nt] = range;
  }
  return bounds;
}

std::set<std::string> reachable_terminals(const GraphicGrammar& g, const std::string& nonterminal) {
  if (!g.is_nonterminal(nonterminal)) fail(ErrorKind::argument, "unknown nonterminal '" + nonterminal + "'");
  std::set<std::string> out;
  std::set<std::string> seen{nonterminal};
  std::vector<std::string> todo{nonterminal};
  while (!todo.empty()) {
    const auto a = todo.back();
    todo.pop_back();
    for (int ri : g.rules_for(a))
      for (const auto& v : g.rules[ri].rhs.vertices) {
        if (g.is_terminal(v.label))
          out.insert(v.label);
        else if (seen.insert(v.label).second)
          todo.push_back(v.label);
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rule application

EmbeddingContext embedding_context(const GraphicGrammar& g) {
  EmbeddingContext ctx;
  ctx.kind = g.embedding;
  ctx.baseline_relation = g.baseline_relation;
  return ctx;
}

LabeledGraph apply_rule(const LabeledGraph& host, int u, const Production& rule, const EmbeddingContext& ctx) {
  const auto* target = host.find(u);
  if (!target) fail(ErrorKind::argument, "vertex " + std::to_string(u) + " not in host graph");
  if (target->label != rule.lhs)
    fail(ErrorKind::argument, "rule " + rule.id + " expects '" + rule.lhs + "' but vertex " + std::to_string(u) +
                                  " is '" + target->label + "'");

  const int base = host.max_id() + 1;
  auto fresh = [&](int rhs_id) { return base + rule.rhs.position(rhs_id); };

  LabeledGraph out;
  for (const auto& v : host.vertices)
    if (v.id != u) out.vertices.push_back(v);
  for (std::size_t i = 0; i < rule.rhs.vertices.size(); ++i)
    out.vertices.push_back({base + static_cast<int>(i), rule.rhs.vertices[i].label});

  for (const auto& e : host.edges)
    if (e.src != u && e.dst != u) out.edges.push_back(e);
  for (const auto& e : rule.rhs.edges) out.edges.push_back({fresh(e.src), fresh(e.dst), e.label});

  const int count = static_cast<int>(rule.rhs.vertices.size());
  int first = rule.baseline_first, last = rule.baseline_last;
  if (ctx.kind == EmbeddingKind::baseline_chain && (first < 0 || last < 0))
    std::tie(first, last) = dominant_baseline(rule.rhs, ctx.baseline_relation);
  if (ctx.kind == EmbeddingKind::min_relation_cost && !ctx.relation_cost)
    fail(ErrorKind::argument, "min_relation_cost embedding needs a relation cost function");

  auto argmin = [&](auto cost) {
    int best = base;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i) {
      const double c = cost(base + i);
      if (c < best_cost) {
        best_cost = c;
        best = base + i;
      }
    }
    return best;
  };

  std::set<std::tuple<int, int, std::string>> present;
  for (const auto& e : out.edges) present.emplace(e.src, e.dst, e.label);
  auto add = [&](int s, int d, const std::string& label) {
    if (present.emplace(s, d, label).second) out.edges.push_back({s, d, label});
  };
  for (const auto& e : host.edges) {
    if (e.dst == u) {
      const int v = ctx.kind == EmbeddingKind::baseline_chain
                        ? base + first
                        : argmin([&](int cand) { return ctx.relation_cost(e.src, cand); });
      add(e.src, v, e.label);
    } else if (e.src == u) {
      const int v = ctx.kind == EmbeddingKind::baseline_chain
                        ? base + last
                        : argmin([&](int cand) { return ctx.relation_cost(cand, e.dst); });
      add(v, e.dst, e.label);
    }
  }

  if (host.is_connected() && !out.is_connected())
    fail(ErrorKind::embedding, "applying rule " + rule.id + " disconnected the graph");
  return out;
}

std::function<double(int, int)> seeded_relation_cost(std::uint64_t seed) {
  return [seed](int a, int b) {
    // splitmix64 over (seed, a, b)
    std::uint64_t z = seed ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) ^
                      static_cast<std::uint32_t>(b);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) / static_cast<double>(1ULL << 53);
  };
}

// ---------------------------------------------------------------------------
// Generation

Derivation derive(const GraphicGrammar& g, const std::vector<std::string>& rule_ids, const EmbeddingContext& ctx) {
  Derivation d;
  d.graph.vertices.push_back({0, g.initial});
  for (const auto& id : rule_ids) {
    const Production& r = g.rule(id);
    int u = std::numeric_limits<int>::max();
    for (const auto& v : d.graph.vertices)
      if (v.label == r.lhs) u = std::min(u, v.id);
    if (u == std::numeric_limits<int>::max())
      fail(ErrorKind::argument, "rule " + id + " has no '" + r.lhs + "' vertex to rewrite");
    const int base = d.graph.max_id() + 1;
    d.graph = apply_rule(d.graph, u, r, ctx);
    DerivationStep step{u, id, {}};
    for (std::size_t i = 0; i < r.rhs.vertices.size(); ++i) step.new_vertices.push_back(base + static_cast<int>(i));
    d.steps.push_back(std::move(step));
  }
  return d;
}

Derivation generate(const GraphicGrammar& g, int max_symbols, std::uint64_t seed) {
  const SizeBounds bounds = compute_size_bounds(g);
  auto min_of = [&](const std::string& label) { return g.is_terminal(label) ? 1 : bounds.at(label).min_symbols; };
  if (max_symbols < min_of(g.initial))
    fail(ErrorKind::argument, "max_symbols " + std::to_string(max_symbols) + " is below the minimum size " +
                                  std::to_string(min_of(g.initial)) + " of '" + g.initial + "'");

  std::mt19937_64 rng(seed);
  Derivation d;
  EmbeddingContext ctx = embedding_context(g);
  // For min_relation_cost, attachments that put a vertex in an edge role its
  // label never plays in any rule cost one extra unit; the seeded noise then
  // picks among the remaining candidates.
  const Production* pending = nullptr;
  int pending_base = 0;
  std::set<std::string> as_src, as_dst;
  for (const auto& r : g.rules)
    for (const auto& e : r.rhs.edges) {
      as_src.insert(r.rhs.find(e.src)->label);
      as_dst.insert(r.rhs.find(e.dst)->label);
    }
  if (ctx.kind == EmbeddingKind::min_relation_cost) {
    auto noise = seeded_relation_cost(seed ^ 0x5eedULL);
    ctx.relation_cost = [&, noise](int a, int b) {
      double c = noise(a, b);
      if (b >= pending_base && !as_dst.count(pending->rhs.vertices[b - pending_base].label)) c += 1.0;
      if (a >= pending_base && !as_src.count(pending->rhs.vertices[a - pending_base].label)) c += 1.0;
      return c;
    };
  }

  d.graph.vertices.push_back({0, g.initial});
  int committed_min = min_of(g.initial);  // lower bound on the final symbol count

  for (;;) {
    int u = -1;
    for (const auto& v : d.graph.vertices)
      if (g.is_nonterminal(v.label) && (u < 0 || v.id < u)) u = v.id;
    if (u < 0) break;
    const std::string label = d.graph.find(u)->label;
    const int slack = max_symbols - committed_min;

    std::vector<int> candidates;
    std::vector<double> weights;
    for (int ri : g.rules_for(label)) {
      int rhs_min = 0;
      for (const auto& v : g.rules[ri].rhs.vertices) rhs_min += min_of(v.label);
      const int growth = rhs_min - min_of(label);
      if (growth > slack) continue;
      candidates.push_back(ri);
      // Growing rules become less likely as the symbol budget runs out.
      weights.push_back(growth == 0 ? 1.0 : static_cast<double>(slack - growth + 1) / (slack + 1));
    }
    if (candidates.empty()) fail(ErrorKind::state, "no rule fits the remaining budget for '" + label + "'");
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const Production& r = g.rules[candidates[pick(rng)]];

    int rhs_min = 0;
    for (const auto& v : r.rhs.vertices) rhs_min += min_of(v.label);
    committed_min += rhs_min - min_of(label);

    const int base = d.graph.max_id() + 1;
    pending = &r;
    pending_base = base;
    d.graph = apply_rule(d.graph, u, r, ctx);
    DerivationStep step{u, r.id, {}};
    for (std::size_t i = 0; i < r.rhs.vertices.size(); ++i) step.new_vertices.push_back(base + static_cast<int>(i));
    d.steps.push_back(std::move(step));
  }
  return d;
}

}  // namespace inkgraph
