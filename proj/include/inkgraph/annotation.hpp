#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace inkgraph {

/// Ground-truth labeling of a stroke set: symbols as stroke groups plus the
/// labeled relations between them.
struct GroundTruth {
  struct Symbol {
    std::string label;
    std::vector<int> stroke_ids;  // sorted
    friend bool operator==(const Symbol&, const Symbol&) = default;
  };
  struct Relation {
    int src_symbol = 0;
    int dst_symbol = 0;
    std::string label;
    friend bool operator==(const Relation&, const Relation&) = default;
  };

  std::vector<Symbol> symbols;
  std::vector<Relation> relations;

  /// Index of the symbol with exactly these (sorted) strokes, or -1.
  int find_symbol(const std::vector<int>& stroke_ids) const;
  /// Label of the relation src -> dst, or empty.
  std::string relation_label(int src_symbol, int dst_symbol) const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

GroundTruth parse_annotation_json(std::string_view text);
GroundTruth load_annotation(const std::string& path);
std::string annotation_to_json(const GroundTruth& truth);
void save_annotation(const GroundTruth& truth, const std::string& path);

}  // namespace inkgraph
