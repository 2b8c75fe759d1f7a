#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace inkgraph {

/// Directed graph with labeled vertices and edges. Vertex ids are arbitrary
/// integers; they need not be contiguous.
struct LabeledGraph {
  struct Vertex {
    int id = 0;
    std::string label;
    friend bool operator==(const Vertex&, const Vertex&) = default;
  };
  struct Edge {
    int src = 0;
    int dst = 0;
    std::string label;
    friend bool operator==(const Edge&, const Edge&) = default;
  };

  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  const Vertex* find(int id) const;
  /// Position of the vertex in `vertices`, or -1.
  int position(int id) const;
  int max_id() const;
  /// Weak connectivity; the empty graph counts as connected.
  bool is_connected() const;
  /// Throws validation error on duplicate ids, dangling endpoints, self loops or duplicate edges.
  void validate() const;
  /// `vertex <id> <label>` then `edge <src> <dst> <label>` lines, sorted.
  std::string serialize() const;

  friend bool operator==(const LabeledGraph&, const LabeledGraph&) = default;
};

enum class RuleKind { terminal, nonterminal };
enum class EmbeddingKind { baseline_chain, min_relation_cost };

std::string_view to_string(EmbeddingKind kind);

struct Production {
  std::string id;
  std::string lhs;
  LabeledGraph rhs;
  RuleKind kind = RuleKind::nonterminal;
  std::optional<std::string> render_template;
  // Positions (into rhs.vertices) of the first and last vertex of the
  // dominant baseline; filled for baseline_chain grammars.
  int baseline_first = -1;
  int baseline_last = -1;
};

struct SymbolRange {
  int min_symbols = 1;
  std::optional<int> max_symbols;  // nullopt = unbounded

  bool admits(int symbols) const { return symbols >= min_symbols && (!max_symbols || symbols <= *max_symbols); }
  friend bool operator==(const SymbolRange&, const SymbolRange&) = default;
};

using SizeBounds = std::map<std::string, SymbolRange>;

/// Context-free graph grammar M = (N, T, I, R) plus relation labels and the
/// embedding used when rewriting a host graph.
class GraphicGrammar {
public:
  std::set<std::string> nonterminals;
  std::set<std::string> terminals;
  std::string initial;
  std::vector<Production> rules;
  std::set<std::string> relation_labels;
  EmbeddingKind embedding = EmbeddingKind::baseline_chain;
  std::string baseline_relation = "h";
  std::string name;

  /// Splits mixed terminal/nonterminal right-hand sides, computes baselines
  /// and checks every structural invariant. Throws validation or embedding
  /// errors listing all offenders.
  void finalize();

  bool is_terminal(const std::string& label) const { return terminals.count(label) != 0; }
  bool is_nonterminal(const std::string& label) const { return nonterminals.count(label) != 0; }
  const Production& rule(const std::string& id) const;
  /// Indices into `rules` of the productions whose lhs is `nonterminal`.
  const std::vector<int>& rules_for(const std::string& nonterminal) const;
  bool has_templates() const;

private:
  std::map<std::string, std::vector<int>> by_lhs_;
};

GraphicGrammar parse_grammar_xml(std::string_view text);
GraphicGrammar load_grammar(const std::string& path);

SizeBounds compute_size_bounds(const GraphicGrammar& g);
std::set<std::string> reachable_terminals(const GraphicGrammar& g, const std::string& nonterminal);

/// Information the embedding needs at rule application time.
struct EmbeddingContext {
  EmbeddingKind kind = EmbeddingKind::baseline_chain;
  std::string baseline_relation = "h";
  /// Cost of relating host vertex -> new vertex (or new -> host); ids refer
  /// to the graph being built. Required for min_relation_cost.
  std::function<double(int src, int dst)> relation_cost;
};

EmbeddingContext embedding_context(const GraphicGrammar& g);

/// Replaces vertex `u` of `host` by the rule's rhs with fresh vertex ids,
/// reattaching u's edges per the embedding. New ids are assigned in rhs order
/// starting at host.max_id() + 1.
LabeledGraph apply_rule(const LabeledGraph& host, int u, const Production& rule, const EmbeddingContext& ctx);

/// Positions of the first/last vertices of the unique dominant baseline of
/// `rhs`. Throws embedding error when the baseline is missing or ambiguous.
std::pair<int, int> dominant_baseline(const LabeledGraph& rhs, const std::string& horizontal_label);

struct DerivationStep {
  int replaced_vertex = 0;
  std::string rule_id;
  std::vector<int> new_vertices;
};

struct Derivation {
  LabeledGraph graph;
  std::vector<DerivationStep> steps;
};

/// Samples a terminal graph of L(g) with at most `max_symbols` vertices.
Derivation generate(const GraphicGrammar& g, int max_symbols, std::uint64_t seed);

/// Applies the given rules in order, each to the lowest-id vertex labeled with the rule's lhs.
Derivation derive(const GraphicGrammar& g, const std::vector<std::string>& rule_ids,
                  const EmbeddingContext& ctx);

/// Deterministic pseudo-random relation cost used when generating with the
/// min_relation_cost embedding.
std::function<double(int, int)> seeded_relation_cost(std::uint64_t seed);

}  // namespace inkgraph
