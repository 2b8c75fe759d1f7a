#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inkgraph {

struct Point {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> t;  // milliseconds

  friend bool operator==(const Point&, const Point&) = default;
};

struct Stroke {
  int id = 0;
  std::vector<Point> points;

  double length() const;
  friend bool operator==(const Stroke&, const Stroke&) = default;
};

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double center_x() const { return 0.5 * (min_x + max_x); }
  double center_y() const { return 0.5 * (min_y + max_y); }
  void expand(const BoundingBox& other);
  /// Euclidean distance between the boxes; 0 when they overlap.
  double gap(const BoundingBox& other) const;
};

BoundingBox bounding_box(const Stroke& stroke);

struct StrokeSet {
  std::vector<Stroke> strokes;
  std::optional<std::string> source;

  std::size_t size() const { return strokes.size(); }
  bool empty() const { return strokes.empty(); }
  /// Position of the stroke with the given id; throws argument error when absent.
  std::size_t index_of(int id) const;
  friend bool operator==(const StrokeSet&, const StrokeSet&) = default;
};

enum class InkFormat { inkml_subset, json };

/// Checks point finiteness, time-stamp consistency, non-empty strokes and id uniqueness.
void validate(const StrokeSet& set);

StrokeSet load_strokes(const std::string& path, InkFormat format);
/// Picks the format from the extension (.inkml / .xml vs anything else).
StrokeSet load_strokes(const std::string& path);
StrokeSet parse_strokes_json(std::string_view text);
StrokeSet parse_inkml(std::string_view text);

std::string strokes_to_json(const StrokeSet& set);
void save_strokes(const StrokeSet& set, const std::string& path);

Stroke smooth(const Stroke& stroke, int window);
Stroke resample(const Stroke& stroke, double spacing);

/// Mean stroke length / 30, or 1 for an empty or zero-length set.
double default_resample_spacing(const StrokeSet& set);

/// Applies smooth then resample to every stroke. spacing <= 0 selects the default.
StrokeSet preprocess(const StrokeSet& set, int window = 3, double spacing = 0.0);

}  // namespace inkgraph
