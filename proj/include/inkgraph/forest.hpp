#pragma once

#include "inkgraph/grammar.hpp"
#include "inkgraph/hypotheses.hpp"
#include "inkgraph/parser.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace inkgraph {

struct CostParams {
  double alpha = 0.4;
  double t_pr = 0.1;
  double score_floor = 1e-12;
  std::size_t max_candidates = 2'000'000;  // cross-product rows per node before pruning
};

/// J = alpha/n_s * J_s + (1 - alpha)/n_r * J_r; the relation term is 0 when n_r = 0.
double tree_cost(double j_s, double j_r, int n_s, int n_r, double alpha);

struct CostRow {
  double J = 0.0;
  double J_s = 0.0;
  double J_r = 0.0;
  int n_s = 0;
  int n_r = 0;
  int derivation = 0;
  std::vector<int> child_rows;  // one per child node of the derivation
  std::string canon;            // serialized reconstruction, used for ties
};

/// Per forest node, the surviving rows sorted by ascending J (ties by canon).
using CostTables = std::vector<std::vector<CostRow>>;

/// Keeps candidates with |J - min| < t_pr * min, plus exact ties with the minimum.
std::vector<CostRow> prune_rows(std::vector<CostRow> candidates, double t_pr);

CostTables build_nbest_tables(const ParseForest& forest, const CostParams& params);

struct TreeNode {
  int node = -1;
  int derivation = 0;
  std::string rule_id;
  std::string nonterminal;
  std::vector<int> stroke_ids;
  std::optional<ForestTerminal> terminal;
  std::vector<TreeNode> children;
  std::vector<ForestEdge> edges;
};

struct CostedTree {
  TreeNode root;
  double J = 0.0;
  double J_s = 0.0;
  double J_r = 0.0;
  int n_s = 0;
  int n_r = 0;
  std::string canon;
};

double symbol_cost(const TreeNode& node, double score_floor = 1e-12);
double relation_cost(const TreeNode& node, double score_floor = 1e-12);
int symbol_count(const TreeNode& node);
int relation_count(const TreeNode& node);

/// Up to n trees from the root table, ascending J.
std::vector<CostedTree> extract_trees(const ParseForest& forest, const CostTables& tables, std::size_t n);
std::vector<CostedTree> extract_trees(const ParseForest& forest, const CostParams& params, std::size_t n);

struct OutputSymbol {
  std::string label;
  std::vector<int> stroke_ids;
  double score = 0.0;
  int hyp = -1;
};

struct OutputRelation {
  std::vector<int> src;  // stroke ids
  std::vector<int> dst;
  std::string label;
  double score = 0.0;
  int src_symbol = -1;  // index into symbols, -1 when the endpoint is not an output symbol
  int dst_symbol = -1;
};

struct Interpretation {
  std::vector<OutputSymbol> symbols;
  std::vector<OutputRelation> relations;
  LabeledGraph graph;  // output symbols and the relations between them
  std::optional<std::string> text;
};

/// Resolves each instantiated edge to a concrete hypotheses-graph edge between
/// output symbols and, when `with_text`, fills in the template rendering.
Interpretation render(const CostedTree& tree, const GraphicGrammar& g, const HypothesesGraph& h, bool with_text);

/// Template rendering only; throws rendering error when a nonterminal rule has no template.
std::string render_text(const TreeNode& node, const GraphicGrammar& g);

}  // namespace inkgraph
