#pragma once

#include "inkgraph/annotation.hpp"
#include "inkgraph/forest.hpp"
#include "inkgraph/grammar.hpp"
#include "inkgraph/hypotheses.hpp"
#include "inkgraph/ink.hpp"
#include "inkgraph/parser.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inkgraph {

/// Everything that determines a run. Serializes to and from JSON.
struct RunConfig {
  std::string grammar;
  std::string profile = "math";  // math | flowchart
  std::string scorer = "oracle";  // oracle | baseline
  double noise = 0.0;             // oracle only
  std::string annotation;         // oracle ground truth; defaults to <input>.annotation.json
  std::string baseline_corpus;    // corpus the baseline scorer is fitted on
  HypothesesConfig hypotheses;
  ParserConfig parser;
  CostParams cost;
  int n_best = 5;
  bool preprocess = true;
  int smooth_window = 3;
  double resample_spacing = 0.0;  // <= 0: mean stroke length / 30
  std::uint64_t seed = 0;
  std::string output;

  /// Defaults for a geometry profile: thresholds, alpha and junk pruning.
  static RunConfig defaults(std::string_view profile);
  void validate() const;
};

RunConfig config_from_json(std::string_view text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

/// Oracle scorer from a ground truth, or a baseline scorer fitted on cfg.baseline_corpus.
std::unique_ptr<Scorer> make_scorer(const RunConfig& cfg, const GraphicGrammar& g, const GroundTruth* truth);

/// Baseline scorer fitted on a corpus directory, preprocessed the same way as inputs.
std::unique_ptr<BaselineScorer> fit_baseline(const RunConfig& cfg);

struct Recognition {
  StrokeSet strokes;  // after preprocessing
  HypothesesGraph hypotheses;
  ParseForest forest;
  std::vector<CostedTree> trees;
  std::vector<Interpretation> interpretations;
};

StrokeSet prepare_strokes(const StrokeSet& raw, const RunConfig& cfg);

Recognition recognize(const GraphicGrammar& g, const StrokeSet& raw, const Scorer& scorer, const RunConfig& cfg);
/// Parse, extraction and rendering over an already built r.hypotheses.
void finish_recognition(const GraphicGrammar& g, Recognition& r, const RunConfig& cfg);

/// {"trees": [{cost, symbols, relations, rendered?}], "stats": {...}}
std::string recognition_to_json(const Recognition& r);

enum class InspectStage { hypotheses, stk, forest };
InspectStage parse_stage(std::string_view name);

std::string inspect(const GraphicGrammar& g, const StrokeSet& raw, const Scorer& scorer, const RunConfig& cfg,
                    InspectStage stage);

/// Ground truth path next to a strokes file: x.strokes.json -> x.annotation.json.
std::string default_annotation_path(const std::string& strokes_path);

}  // namespace inkgraph
