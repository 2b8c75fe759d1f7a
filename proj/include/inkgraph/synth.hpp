#pragma once

#include "inkgraph/annotation.hpp"
#include "inkgraph/grammar.hpp"
#include "inkgraph/ink.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace inkgraph {

enum class GeometryProfile { math, flowchart };

GeometryProfile parse_profile(std::string_view name);
std::string_view to_string(GeometryProfile profile);

struct SynthItem {
  std::string name;
  StrokeSet strokes;
  GroundTruth truth;
  Derivation derivation;
};

/// Draws a terminal graph as ink. Math: symbols laid out along baselines, sp
/// up-right and sb down-right at 0.6 scale. Flowchart: boxes in rows by arrow
/// depth, one stroke per symbol, arrows drawn between the boxes they join.
SynthItem synthesize(const Derivation& d, GeometryProfile profile, std::uint64_t seed);

SynthItem generate_item(const GraphicGrammar& g, int max_symbols, std::uint64_t seed, GeometryProfile profile);

/// `count` items seeded from `seed`; item i uses seed + i.
std::vector<SynthItem> generate_corpus(const GraphicGrammar& g, int count, int max_symbols, std::uint64_t seed,
                                       GeometryProfile profile);

/// Writes item_NNNN.strokes.json, item_NNNN.annotation.json and
/// item_NNNN.derivation.json per item, plus manifest.json.
void write_corpus(const std::vector<SynthItem>& items, const std::string& dir, const std::string& grammar_name,
                  int max_symbols, std::uint64_t seed, GeometryProfile profile);

struct CorpusEntry {
  std::string name;
  StrokeSet strokes;
  GroundTruth truth;
};

/// Reads every item_*.strokes.json with its annotation, sorted by name.
std::vector<CorpusEntry> load_corpus(const std::string& dir);

}  // namespace inkgraph
