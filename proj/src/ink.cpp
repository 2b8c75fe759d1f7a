#include "inkgraph/ink.hpp"

#include "inkgraph/error.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace inkgraph {

namespace {

constexpr std::string_view kModule = "ink";

[[noreturn]] void fail(ErrorKind kind, const std::string& what) { throw Error(kind, kModule, what); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double segment_length(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

}  // namespace

double Stroke::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += segment_length(points[i - 1], points[i]);
  return total;
}

void BoundingBox::expand(const BoundingBox& other) {
  min_x = std::min(min_x, other.min_x);
  min_y = std::min(min_y, other.min_y);
  max_x = std::max(max_x, other.max_x);
  max_y = std::max(max_y, other.max_y);
}

double BoundingBox::gap(const BoundingBox& other) const {
  const double dx = std::max({0.0, other.min_x - max_x, min_x - other.max_x});
  const double dy = std::max({0.0, other.min_y - max_y, min_y - other.max_y});
  return std::hypot(dx, dy);
}

BoundingBox bounding_box(const Stroke& stroke) {
  BoundingBox box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : stroke.points) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
  }
  return box;
}

std::size_t StrokeSet::index_of(int id) const {
  for (std::size_t i = 0; i < strokes.size(); ++i)
    if (strokes[i].id == id) return i;
  fail(ErrorKind::argument, "no stroke with id " + std::to_string(id));
}

void validate(const StrokeSet& set) {
  std::set<int> ids;
  for (const auto& stroke : set.strokes) {
    if (!ids.insert(stroke.id).second)
      fail(ErrorKind::validation, "duplicate stroke id " + std::to_string(stroke.id));
    if (stroke.points.empty()) fail(ErrorKind::validation, "stroke " + std::to_string(stroke.id) + " has no points");
    const bool timed = stroke.points.front().t.has_value();
    for (std::size_t i = 0; i < stroke.points.size(); ++i) {
      const auto& p = stroke.points[i];
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        fail(ErrorKind::validation, "stroke " + std::to_string(stroke.id) + " has a non-finite coordinate");
      if (p.t.has_value() != timed)
        fail(ErrorKind::validation, "stroke " + std::to_string(stroke.id) + " mixes timed and untimed points");
      if (timed && i > 0 && *p.t < *stroke.points[i - 1].t)
        fail(ErrorKind::validation, "stroke " + std::to_string(stroke.id) + " has decreasing time stamps");
    }
  }
}

StrokeSet parse_strokes_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("strokes") || !doc["strokes"].is_array())
    fail(ErrorKind::parse, "expected an object with a 'strokes' array");

  StrokeSet set;
  const auto& strokes = doc["strokes"];
  for (std::size_t i = 0; i < strokes.size(); ++i) {
    const auto& js = strokes[i];
    const std::string where = "strokes[" + std::to_string(i) + "]";
    if (!js.is_object() || !js.contains("points") || !js["points"].is_array())
      fail(ErrorKind::parse, where + ": expected an object with a 'points' array");
    Stroke stroke;
    stroke.id = static_cast<int>(i);
    if (js.contains("id")) {
      if (!js["id"].is_number_integer()) fail(ErrorKind::parse, where + ".id: expected an integer");
      stroke.id = js["id"].get<int>();
    }
    const auto& pts = js["points"];
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto& jp = pts[k];
      const std::string pwhere = where + ".points[" + std::to_string(k) + "]";
      if (!jp.is_array() || jp.size() < 2 || jp.size() > 3)
        fail(ErrorKind::parse, pwhere + ": expected [x, y] or [x, y, t]");
      for (const auto& v : jp)
        if (!v.is_number()) fail(ErrorKind::parse, pwhere + ": non-numeric coordinate");
      Point p{jp[0].get<double>(), jp[1].get<double>(), std::nullopt};
      if (jp.size() == 3) p.t = jp[2].get<double>();
      stroke.points.push_back(p);
    }
    set.strokes.push_back(std::move(stroke));
  }
  if (doc.contains("source") && doc["source"].is_string()) set.source = doc["source"].get<std::string>();
  validate(set);
  return set;
}

namespace {

void collect_traces(const boost::property_tree::ptree& node, std::vector<const boost::property_tree::ptree*>& out) {
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    if (name == "trace")
      out.push_back(&child);
    else
      collect_traces(child, out);
  }
}

double parse_real(std::string_view token, const std::string& where) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) fail(ErrorKind::parse, where + ": bad number '" + std::string(token) + "'");
  return value;
}

}  // namespace

StrokeSet parse_inkml(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    fail(ErrorKind::parse, "malformed InkML at line " + std::to_string(e.line()) + ": " + e.message());
  }

  std::vector<const pt::ptree*> traces;
  collect_traces(tree, traces);

  StrokeSet set;
  std::set<std::string> trace_ids;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const std::string where = "trace #" + std::to_string(i);
    const auto& trace = *traces[i];
    for (const char* attr : {"<xmlattr>.xml:id", "<xmlattr>.id"}) {
      if (auto id = trace.get_optional<std::string>(attr)) {
        if (!trace_ids.insert(*id).second) fail(ErrorKind::validation, "duplicate trace id '" + *id + "'");
      }
    }
    Stroke stroke;
    stroke.id = static_cast<int>(i);
    const std::string content = trace.get_value<std::string>();
    std::size_t start = 0;
    while (start <= content.size()) {
      std::size_t comma = content.find(',', start);
      if (comma == std::string::npos) comma = content.size();
      std::string_view chunk(content.data() + start, comma - start);
      std::vector<std::string_view> tokens;
      std::size_t pos = 0;
      while (pos < chunk.size()) {
        while (pos < chunk.size() && std::isspace(static_cast<unsigned char>(chunk[pos]))) ++pos;
        std::size_t tok = pos;
        while (pos < chunk.size() && !std::isspace(static_cast<unsigned char>(chunk[pos]))) ++pos;
        if (pos > tok) tokens.push_back(chunk.substr(tok, pos - tok));
      }
      if (!tokens.empty()) {
        if (tokens.size() < 2 || tokens.size() > 3)
          fail(ErrorKind::parse, where + ": expected 2 or 3 coordinates per point");
        Point p{parse_real(tokens[0], where), parse_real(tokens[1], where), std::nullopt};
        if (tokens.size() == 3) p.t = parse_real(tokens[2], where);
        stroke.points.push_back(p);
      }
      start = comma + 1;
    }
    if (stroke.points.empty()) fail(ErrorKind::parse, where + ": empty trace");
    set.strokes.push_back(std::move(stroke));
  }
  validate(set);
  return set;
}

StrokeSet load_strokes(const std::string& path, InkFormat format) {
  const std::string text = read_file(path);
  StrokeSet set = format == InkFormat::json ? parse_strokes_json(text) : parse_inkml(text);
  set.source = path;
  return set;
}

StrokeSet load_strokes(const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  return load_strokes(path, (ext == ".inkml" || ext == ".xml") ? InkFormat::inkml_subset : InkFormat::json);
}

std::string strokes_to_json(const StrokeSet& set) {
  nlohmann::json doc;
  doc["strokes"] = nlohmann::json::array();
  for (const auto& stroke : set.strokes) {
    nlohmann::json js;
    js["id"] = stroke.id;
    js["points"] = nlohmann::json::array();
    for (const auto& p : stroke.points) {
      if (p.t)
        js["points"].push_back({p.x, p.y, *p.t});
      else
        js["points"].push_back({p.x, p.y});
    }
    doc["strokes"].push_back(std::move(js));
  }
  return doc.dump();
}

void save_strokes(const StrokeSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  out << strokes_to_json(set) << '\n';
}

Stroke smooth(const Stroke& stroke, int window) {
  if (window < 1 || window % 2 == 0) fail(ErrorKind::argument, "smoothing window must be odd and positive");
  const int n = static_cast<int>(stroke.points.size());
  const int half = window / 2;
  Stroke out = stroke;
  for (int i = 1; i + 1 < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double sx = 0.0, sy = 0.0;
    for (int k = lo; k <= hi; ++k) {
      sx += stroke.points[k].x;
      sy += stroke.points[k].y;
    }
    out.points[i].x = sx / (hi - lo + 1);
    out.points[i].y = sy / (hi - lo + 1);
  }
  return out;
}

Stroke resample(const Stroke& stroke, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) fail(ErrorKind::argument, "resampling spacing must be positive");
  if (stroke.points.size() <= 1) return stroke;

  const auto& pts = stroke.points;
  // Cumulative arc length at each input vertex.
  std::vector<double> arc(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) arc[i] = arc[i - 1] + segment_length(pts[i - 1], pts[i]);
  const double total = arc.back();

  Stroke out;
  out.id = stroke.id;
  out.points.push_back(pts.front());
  std::size_t seg = 1;
  for (int k = 1;; ++k) {
    const double target = k * spacing;
    if (target >= total) break;
    while (seg + 1 < pts.size() && arc[seg] < target) ++seg;
    const double seg_len = arc[seg] - arc[seg - 1];
    const double f = seg_len > 0.0 ? (target - arc[seg - 1]) / seg_len : 0.0;
    const Point& a = pts[seg - 1];
    const Point& b = pts[seg];
    Point p{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), std::nullopt};
    if (a.t && b.t) p.t = *a.t + f * (*b.t - *a.t);
    out.points.push_back(p);
  }
  out.points.push_back(pts.back());
  return out;
}

double default_resample_spacing(const StrokeSet& set) {
  if (set.empty()) return 1.0;
  double total = 0.0;
  for (const auto& s : set.strokes) total += s.length();
  const double mean = total / static_cast<double>(set.size());
  return mean > 0.0 ? mean / 30.0 : 1.0;
}

StrokeSet preprocess(const StrokeSet& set, int window, double spacing) {
  if (spacing <= 0.0) spacing = default_resample_spacing(set);
  StrokeSet out;
  out.source = set.source;
  out.strokes.reserve(set.size());
  for (const auto& s : set.strokes) out.strokes.push_back(resample(smooth(s, window), spacing));
  return out;
}

}  // namespace inkgraph
