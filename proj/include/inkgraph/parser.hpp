#pragma once

#include "inkgraph/grammar.hpp"
#include "inkgraph/hypotheses.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace inkgraph {

/// Set of stroke positions (indices into the H stroke universe).
class StrokeMask {
public:
  StrokeMask() = default;
  explicit StrokeMask(std::size_t bits) : words_((bits + 63) / 64, 0) {}

  void set(std::size_t bit) { words_[bit / 64] |= std::uint64_t{1} << (bit % 64); }
  bool test(std::size_t bit) const { return (words_[bit / 64] >> (bit % 64)) & 1U; }
  std::size_t count() const;
  bool empty() const;
  bool intersects(const StrokeMask& other) const;
  bool subset_of(const StrokeMask& other) const;
  StrokeMask& operator|=(const StrokeMask& other);
  std::vector<std::size_t> bits() const;
  std::size_t hash() const;

  friend bool operator==(const StrokeMask&, const StrokeMask&) = default;
  friend auto operator<=>(const StrokeMask&, const StrokeMask&) = default;

private:
  std::vector<std::uint64_t> words_;
};

struct StrokeMaskHash {
  std::size_t operator()(const StrokeMask& m) const { return m.hash(); }
};

/// One H edge lying between two groups.
struct Realizer {
  int src_hyp = 0;
  int dst_hyp = 0;
  double score = 0.0;
  friend bool operator==(const Realizer&, const Realizer&) = default;
};

/// A relation label between two disjoint groups with its best score.
struct GroupRelation {
  std::string label;
  double score = 0.0;
  std::vector<Realizer> realizers;  // sorted by descending score, then ids
};

struct StrokeGroup {
  std::vector<int> stroke_ids;  // sorted
  StrokeMask mask;
  std::vector<int> inside;  // hypotheses whose strokes lie in the group
  std::vector<int> exact;   // hypotheses with exactly these strokes
  std::map<std::string, double> labels;  // best score per label over `inside`
  int hyp_count = 0;
  double mean_junk = 0.0;   // over symbol and relation hypotheses inside
  bool backed = true;       // false for the whole input when no subgraph covers it
};

/// STK: every stroke group underlying a connected subgraph of H whose
/// hypotheses have pairwise disjoint strokes, with the relations between them.
class StrokeGroupIndex {
public:
  StrokeGroupIndex(const HypothesesGraph& h, std::optional<std::size_t> max_vertices,
                   std::optional<std::size_t> max_strokes, std::size_t budget);

  const HypothesesGraph& hypotheses() const { return *h_; }
  const std::vector<StrokeGroup>& groups() const { return groups_; }
  std::size_t universe_size() const { return h_->stroke_universe.size(); }
  /// Largest stroke count of any hypothesis.
  int max_strokes_per_symbol() const { return max_strokes_per_symbol_; }

  int find(const StrokeMask& mask) const;
  /// Index of the group covering all strokes, adding an unbacked one if needed.
  int whole_input();
  StrokeMask mask_of(const std::vector<int>& stroke_ids) const;

  /// Relations a -> b (empty when none or when the groups overlap).
  const std::vector<GroupRelation>& relations(int a, int b) const;
  const GroupRelation* relation(int a, int b, const std::string& label) const;
  /// Groups b with at least one relation a -> b, sorted.
  const std::vector<int>& successors(int a) const;
  /// Groups a with at least one relation a -> b, sorted.
  const std::vector<int>& predecessors(int b) const;

  /// Groups one per line, then relations between groups.
  std::string dump() const;

private:
  int add_group(const StrokeMask& mask, bool backed);
  void outgoing(int a) const;

  const HypothesesGraph* h_;
  std::vector<StrokeGroup> groups_;
  std::unordered_map<StrokeMask, int, StrokeMaskHash> index_;
  std::map<int, std::size_t> stroke_position_;
  std::vector<std::vector<int>> containing_;  // hypothesis -> groups containing it
  int max_strokes_per_symbol_ = 1;

  mutable std::vector<char> out_ready_;
  mutable std::vector<std::map<int, std::vector<GroupRelation>>> out_;
  mutable std::vector<std::vector<int>> succ_;
  mutable std::vector<std::vector<int>> pred_;
  mutable bool pred_ready_ = false;
};

struct ParserConfig {
  double t_junk = 0.25;
  int junk_min_hyps = 5;
  bool prune_size_bounds = true;
  bool prune_terminal_reachability = true;
  bool prune_junk = false;
  bool strict_induced = false;
  std::optional<std::size_t> matching_budget;  // search steps per parse
  std::size_t stk_budget = 2'000'000;          // subsets enumerated while building STK
};

struct ParserStats {
  std::size_t memo_hits = 0;
  std::size_t memo_misses = 0;
  std::size_t keys_computed = 0;
  std::size_t max_computations_per_key = 0;
  std::size_t matchings_examined = 0;
  std::size_t search_steps = 0;
  std::size_t pruned_size = 0;
  std::size_t pruned_terminals = 0;
  std::size_t pruned_junk = 0;
  std::size_t stk_groups = 0;
};

/// Rhs instance over stroke groups.
struct InstantiatedGraph {
  int rule = 0;                    // index into grammar.rules
  std::vector<int> groups;         // per rhs vertex
  std::vector<GroupRelation> edges;  // per rhs edge, the realized label
};

struct ParsedGraph {
  InstantiatedGraph graph;
  // Terminal rules only.
  int hyp = -1;
  std::string terminal;
  double score = 0.0;
};

/// Parse forest reachable from (S_input, I). Children precede parents.
struct ForestTerminal {
  std::string label;
  double score = 0.0;
  int hyp = -1;
};

struct ForestEdge {
  int src = 0;  // rhs positions
  int dst = 0;
  std::string label;
  double score = 0.0;
  std::vector<Realizer> realizers;
};

struct ForestDerivation {
  std::string rule_id;
  std::optional<ForestTerminal> terminal;  // terminal rules
  std::vector<int> children;               // node per rhs vertex, nonterminal rules
  std::vector<ForestEdge> edges;
};

struct ForestNode {
  std::vector<int> stroke_ids;
  std::string nonterminal;
  std::vector<ForestDerivation> derivations;
};

struct ParseForest {
  std::vector<ForestNode> nodes;
  int root = -1;
  ParserStats stats;

  bool empty() const { return root < 0; }
  /// `node <i> {strokes} NT` lines each followed by its derivations.
  std::string dump() const;
};

class Parser {
public:
  Parser(const GraphicGrammar& g, const HypothesesGraph& h, ParserConfig cfg = {});

  const StrokeGroupIndex& stk() const { return stk_; }
  StrokeGroupIndex& stk() { return stk_; }
  const ParserStats& stats() const { return stats_; }

  /// Algorithm 1 on (group, nonterminal), memoized.
  const std::vector<ParsedGraph>& parse(int group, const std::string& nonterminal);
  std::vector<InstantiatedGraph> find_valid_matchings(int group, int rule);

  /// Parses the whole input under the initial symbol and extracts the forest.
  ParseForest run();
  /// Forest reachable from an already parsed key.
  ParseForest forest(int group, const std::string& nonterminal) const;
  bool memoized(int group, const std::string& nonterminal) const;
  /// How many times each key was computed; exposed for instrumentation tests.
  const std::map<std::pair<int, std::string>, int>& computations() const { return computations_; }

private:
  struct Entry {
    bool done = false;
    std::vector<ParsedGraph> parses;
  };

  bool admissible(int group, const std::string& nonterminal, bool count);

  const GraphicGrammar* g_;
  const HypothesesGraph* h_;
  ParserConfig cfg_;
  SizeBounds bounds_;
  std::map<std::string, std::set<std::string>> reach_;
  StrokeGroupIndex stk_;
  std::map<std::pair<int, std::string>, Entry> tbl_;
  std::map<std::pair<int, std::string>, int> computations_;
  ParserStats stats_;
};

/// build STK, parse(all strokes, I), extract the forest. Empty forest when
/// the input is not in the language.
ParseForest parse_input(const GraphicGrammar& g, const HypothesesGraph& h, const ParserConfig& cfg = {});

}  // namespace inkgraph
