#pragma once

#include "inkgraph/annotation.hpp"
#include "inkgraph/forest.hpp"
#include "inkgraph/hypotheses.hpp"
#include "inkgraph/pipeline.hpp"
#include "inkgraph/synth.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace inkgraph {

/// Comparison of one interpretation against its ground truth.
struct ItemScore {
  int gt_symbols = 0;
  int gt_relations = 0;
  int strokes = 0;
  int strokes_correct = 0;
  int symbols_correct = 0;    // same strokes and label
  int relations_correct = 0;  // both ends segmented right and same label
  int errors = 0;
};

/// Symbols match when their stroke sets are identical. Errors count unmatched
/// ground-truth symbols, unmatched output symbols, label mismatches among
/// matched symbols, relation mismatches over ordered matched pairs, and output
/// relations whose ends are not output symbols.
ItemScore score_item(const GroundTruth& truth, const Interpretation* output);

struct HypothesesRecall {
  int symbols = 0;
  int relations = 0;
  bool expression = false;
};

/// How much of the ground truth survives into H: symbols as vertices with the
/// true label, relations as edges between them with the true label.
HypothesesRecall hypotheses_recall(const GroundTruth& truth, const HypothesesGraph& h);

struct ItemResult {
  std::string name;
  bool interpreted = false;
  bool budget_exceeded = false;
  int errors = -1;  // -1 when the item was not processed to the end
  bool hypotheses_complete = false;
};

struct EvalReport {
  std::size_t items = 0;
  double stroke_accuracy = 0.0;
  double symbol_accuracy = 0.0;
  double relation_accuracy = 0.0;
  std::array<double, 4> recall{};  // expressions with <= k errors, k = 0..3
  double hyp_symbol_recall = 0.0;
  double hyp_relation_recall = 0.0;
  double hyp_expression_recall = 0.0;
  std::size_t no_interpretation = 0;
  std::size_t budget_exceeded = 0;
  ParserStats counters;
  std::vector<ItemResult> per_item;

  std::string to_json() const;
  std::string table() const;
};

EvalReport evaluate(const GraphicGrammar& g, const std::vector<CorpusEntry>& corpus, const RunConfig& cfg);

}  // namespace inkgraph
