#include "inkgraph/synth.hpp"

#include "inkgraph/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace inkgraph {

namespace fs = std::filesystem;

namespace {
constexpr std::string_view kModule = "synth";

[[noreturn]] void fail(ErrorKind kind, const std::string& what) { throw Error(kind, kModule, what); }

using Polyline = std::vector<std::pair<double, double>>;

/// Inserts points so no segment is longer than `step`.
Polyline densify(const Polyline& line, double step) {
  Polyline out;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const auto [x0, y0] = line[i];
    const auto [x1, y1] = line[i + 1];
    const int n = std::max(1, static_cast<int>(std::ceil(std::hypot(x1 - x0, y1 - y0) / step)));
    for (int k = 0; k < n; ++k) out.emplace_back(x0 + (x1 - x0) * k / n, y0 + (y1 - y0) * k / n);
  }
  out.push_back(line.back());
  return out;
}

std::uint64_t label_hash(const std::string& label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool two_strokes(const std::string& label) {
  static const std::set<std::string> multi = {"+", "4", "t", "x", "k", "A", "E", "F", "H", "K", "T", "X", "f"};
  return multi.count(label) != 0;
}

/// Unit-box glyph outline (x in [0,1], y in [0,1]) per label; fixed per label
/// so every writer draws the same letter alike.
std::vector<Polyline> glyph(const std::string& label) {
  if (label == "+") return {{{0.0, 0.5}, {1.0, 0.5}}, {{0.5, 0.0}, {0.5, 1.0}}};
  if (label == "-") return {{{0.0, 0.5}, {1.0, 0.5}}};
  if (label == "<") return {{{1.0, 0.9}, {0.0, 0.5}, {1.0, 0.1}}};
  if (label == ">") return {{{0.0, 0.9}, {1.0, 0.5}, {0.0, 0.1}}};
  std::mt19937_64 rng(label_hash(label));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Polyline body;
  const int n = 5 + static_cast<int>(rng() % 4);
  for (int i = 0; i < n; ++i) body.emplace_back(u(rng), u(rng));
  // Pin the outline to the full box so scripts and baselines line up.
  body.front() = {0.0, u(rng)};
  body[n / 2].second = 1.0;
  body.back() = {1.0, 0.0};
  std::vector<Polyline> out{body};
  if (two_strokes(label)) {
    const double y = 0.3 + 0.4 * u(rng);
    out.push_back({{0.1, y}, {0.9, y + 0.2 * (u(rng) - 0.5)}});
  }
  return out;
}

struct Placed {
  int vertex = 0;
  double x = 0.0, y = 0.0;  // lower-left corner
  double scale = 1.0;
};

class MathLayout {
public:
  explicit MathLayout(const LabeledGraph& graph) : g_(graph) {}

  std::vector<Placed> run() {
    std::set<int> has_incoming;
    for (const auto& e : g_.edges) has_incoming.insert(e.dst);
    int root = -1;
    for (const auto& v : g_.vertices)
      if (!has_incoming.count(v.id) && (root < 0 || v.id < root)) root = v.id;
    if (root < 0) root = g_.vertices.front().id;
    place(root, 0.0, 0.0, 1.0);
    for (const auto& v : g_.vertices)
      if (!seen_.count(v.id)) fail(ErrorKind::data, "math layout needs a tree-shaped graph");
    return out_;
  }

private:
  double width(int v, double s) const { return (g_.find(v)->label == "-" ? 0.7 : 0.6) * s; }

  /// Returns the right edge of the subtree.
  double place(int v, double x, double y, double s) {
    if (!seen_.insert(v).second) fail(ErrorKind::data, "math layout met a vertex twice");
    out_.push_back({v, x, y, s});
    double right = x + width(v, s);
    const double after_base = right;
    std::vector<const LabeledGraph::Edge*> scripts, horizontal;
    for (const auto& e : g_.edges) {
      if (e.src != v) continue;
      (e.label == "h" ? horizontal : scripts).push_back(&e);
    }
    for (const auto* e : scripts) {
      const double cs = 0.6 * s;
      const double cy = e->label == "sp" ? y + 0.65 * s : y - 0.35 * s;
      right = std::max(right, place(e->dst, after_base + 0.08 * s, cy, cs));
    }
    for (const auto* e : horizontal) right = place(e->dst, right + 0.3 * s, y, s);
    return right;
  }

  const LabeledGraph& g_;
  std::vector<Placed> out_;
  std::set<int> seen_;
};

struct Box {
  double cx = 0.0, cy = 0.0, hw = 0.8, hh = 0.4;
};

Polyline box_outline(const std::string& label, const Box& b) {
  const double l = b.cx - b.hw, r = b.cx + b.hw, lo = b.cy - b.hh, hi = b.cy + b.hh;
  if (label == "process") return {{l, lo}, {r, lo}, {r, hi}, {l, hi}, {l, lo}};
  if (label == "data") {
    const double k = 0.25 * b.hw;
    return {{l, lo}, {r - k, lo}, {r, hi}, {l + k, hi}, {l, lo}};
  }
  if (label == "decision") return {{b.cx, lo}, {r, b.cy}, {b.cx, hi}, {l, b.cy}, {b.cx, lo}};
  if (label == "terminator") {
    const double k = 0.5 * b.hh;
    return {{l + k, lo}, {r - k, lo}, {r, b.cy}, {r - k, hi}, {l + k, hi}, {l, b.cy}, {l + k, lo}};
  }
  if (label == "connection") {
    Polyline c;
    for (int i = 0; i <= 12; ++i) {
      const double a = 2.0 * M_PI * i / 12.0;
      c.emplace_back(b.cx + b.hw * std::cos(a), b.cy + b.hh * std::sin(a));
    }
    return c;
  }
  fail(ErrorKind::data, "flowchart layout has no shape for '" + label + "'");
}

/// Point where the ray from the box centre towards (tx,ty) leaves the box.
std::pair<double, double> exit_point(const Box& b, double tx, double ty) {
  const double dx = tx - b.cx, dy = ty - b.cy;
  double t = 1.0;
  if (std::abs(dx) > 1e-12) t = std::min(t, b.hw / std::abs(dx));
  if (std::abs(dy) > 1e-12) t = std::min(t, b.hh / std::abs(dy));
  return {b.cx + dx * t, b.cy + dy * t};
}

std::vector<std::vector<Polyline>> flowchart_strokes(const LabeledGraph& graph) {
  std::map<int, int> src_of, targ_of;
  std::vector<int> boxes;
  for (const auto& v : graph.vertices)
    if (v.label != "arrow") boxes.push_back(v.id);
  for (const auto& e : graph.edges) {
    if (graph.find(e.src)->label != "arrow") fail(ErrorKind::data, "flowchart relations must start at an arrow");
    (e.label == "src" ? src_of : targ_of)[e.src] = e.dst;
  }
  // Longest-path rows over arrows src -> targ.
  std::map<int, int> depth;
  for (int b : boxes) depth[b] = 0;
  for (std::size_t round = 0; round <= boxes.size(); ++round) {
    bool changed = false;
    for (const auto& [arrow, s] : src_of) {
      auto t = targ_of.find(arrow);
      if (t == targ_of.end()) continue;
      if (depth[t->second] < depth[s] + 1 && depth[s] + 1 <= static_cast<int>(boxes.size())) {
        depth[t->second] = depth[s] + 1;
        changed = true;
      }
    }
    if (!changed) break;
  }
  std::map<int, std::vector<int>> rows;
  for (int b : boxes) rows[depth[b]].push_back(b);
  std::map<int, Box> place;
  for (auto& [d, members] : rows) {
    const double n = static_cast<double>(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      Box b;
      b.cx = (static_cast<double>(i) - (n - 1.0) / 2.0) * 3.0;
      b.cy = -2.5 * d;
      if (graph.find(members[i])->label == "connection") b.hw = b.hh = 0.3;
      place[members[i]] = b;
    }
  }

  std::vector<std::vector<Polyline>> strokes(graph.vertices.size());
  std::map<std::pair<int, int>, int> repeats;
  for (std::size_t i = 0; i < graph.vertices.size(); ++i) {
    const auto& v = graph.vertices[i];
    if (v.label != "arrow") {
      strokes[i].push_back(densify(box_outline(v.label, place[v.id]), 0.2));
      continue;
    }
    if (!src_of.count(v.id) || !targ_of.count(v.id)) fail(ErrorKind::data, "arrow without both endpoints");
    const Box& a = place[src_of[v.id]];
    const Box& b = place[targ_of[v.id]];
    const int k = repeats[{src_of[v.id], targ_of[v.id]}]++;
    const double shift = 0.25 * k;
    auto [x0, y0] = exit_point(a, b.cx + shift, b.cy);
    auto [x1, y1] = exit_point(b, a.cx + shift, a.cy);
    x0 += shift;
    x1 += shift;
    const double len = std::max(std::hypot(x1 - x0, y1 - y0), 1e-6);
    const double ux = (x1 - x0) / len, uy = (y1 - y0) / len;
    const double hx = x1 - 0.2 * ux, hy = y1 - 0.2 * uy;
    Polyline line = densify({{x0, y0}, {x1, y1}}, 0.2);
    line.emplace_back(hx - 0.12 * uy, hy + 0.12 * ux);
    line.emplace_back(x1, y1);
    line.emplace_back(hx + 0.12 * uy, hy - 0.12 * ux);
    strokes[i].push_back(std::move(line));
  }
  return strokes;
}

}  // namespace

GeometryProfile parse_profile(std::string_view name) {
  if (name == "math") return GeometryProfile::math;
  if (name == "flowchart") return GeometryProfile::flowchart;
  fail(ErrorKind::argument, "unknown geometry profile '" + std::string(name) + "'");
}

std::string_view to_string(GeometryProfile profile) {
  return profile == GeometryProfile::math ? "math" : "flowchart";
}

SynthItem synthesize(const Derivation& d, GeometryProfile profile, std::uint64_t seed) {
  const LabeledGraph& graph = d.graph;
  if (graph.vertices.empty()) fail(ErrorKind::argument, "cannot draw an empty graph");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);

  // Per vertex position in graph.vertices: list of strokes.
  std::vector<std::vector<Polyline>> per_vertex(graph.vertices.size());
  std::vector<double> order_key(graph.vertices.size(), 0.0);
  if (profile == GeometryProfile::math) {
    for (const auto& p : MathLayout(graph).run()) {
      const int pos = graph.position(p.vertex);
      const std::string& label = graph.vertices[pos].label;
      const double w = (label == "-" ? 0.7 : 0.6) * p.scale, hgt = p.scale;
      const double noise = 0.015 * p.scale;
      for (const auto& part : glyph(label)) {
        Polyline line;
        for (const auto& [u, v] : part) {
          double y = v;
          if (label == "-") y = 0.45 + 0.1 * v;
          line.emplace_back(p.x + u * w + noise * jitter(rng), p.y + y * hgt + noise * jitter(rng));
        }
        per_vertex[pos].push_back(densify(line, 0.08 * p.scale));
      }
      order_key[pos] = p.x;
    }
  } else {
    per_vertex = flowchart_strokes(graph);
    for (auto& strokes : per_vertex)
      for (auto& line : strokes)
        for (auto& [x, y] : line) {
          x += 0.01 * jitter(rng);
          y += 0.01 * jitter(rng);
        }
    for (std::size_t i = 0; i < order_key.size(); ++i) order_key[i] = static_cast<double>(i);
  }

  std::vector<std::size_t> order(graph.vertices.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return order_key[a] < order_key[b]; });

  SynthItem item;
  item.derivation = d;
  item.truth.symbols.resize(graph.vertices.size());
  int next_id = 0;
  double t = 0.0;
  for (std::size_t pos : order) {
    auto& sym = item.truth.symbols[pos];
    sym.label = graph.vertices[pos].label;
    for (const auto& line : per_vertex[pos]) {
      Stroke s;
      s.id = next_id++;
      for (const auto& [x, y] : line) {
        s.points.push_back({x, y, t});
        t += 10.0;
      }
      t += 200.0;
      sym.stroke_ids.push_back(s.id);
      item.strokes.strokes.push_back(std::move(s));
    }
  }
  for (const auto& e : graph.edges)
    item.truth.relations.push_back({graph.position(e.src), graph.position(e.dst), e.label});
  std::sort(item.truth.relations.begin(), item.truth.relations.end(), [](const auto& a, const auto& b) {
    return std::tie(a.src_symbol, a.dst_symbol, a.label) < std::tie(b.src_symbol, b.dst_symbol, b.label);
  });
  return item;
}

SynthItem generate_item(const GraphicGrammar& g, int max_symbols, std::uint64_t seed, GeometryProfile profile) {
  return synthesize(generate(g, max_symbols, seed), profile, seed);
}

std::vector<SynthItem> generate_corpus(const GraphicGrammar& g, int count, int max_symbols, std::uint64_t seed,
                                       GeometryProfile profile) {
  if (count < 0) fail(ErrorKind::argument, "count must be non-negative");
  std::vector<SynthItem> items;
  for (int i = 0; i < count; ++i) {
    SynthItem item = generate_item(g, max_symbols, seed + static_cast<std::uint64_t>(i), profile);
    std::ostringstream name;
    name << "item_" << std::setw(4) << std::setfill('0') << i;
    item.name = name.str();
    item.strokes.source = item.name;
    items.push_back(std::move(item));
  }
  return items;
}

void write_corpus(const std::vector<SynthItem>& items, const std::string& dir, const std::string& grammar_name,
                  int max_symbols, std::uint64_t seed, GeometryProfile profile) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create '" + dir + "': " + ec.message());
  nlohmann::json manifest{{"grammar", grammar_name},
                          {"count", items.size()},
                          {"max_symbols", max_symbols},
                          {"seed", seed},
                          {"profile", std::string(to_string(profile))},
                          {"items", nlohmann::json::array()}};
  for (const auto& item : items) {
    const fs::path base = fs::path(dir) / item.name;
    save_strokes(item.strokes, base.string() + ".strokes.json");
    save_annotation(item.truth, base.string() + ".annotation.json");
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& s : item.derivation.steps) trace.push_back({{"vertex", s.replaced_vertex}, {"rule", s.rule_id}});
    std::ofstream out(base.string() + ".derivation.json", std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write derivation for " + item.name);
    out << nlohmann::json{{"steps", trace}, {"graph", item.derivation.graph.serialize()}}.dump(1) << '\n';
    manifest["items"].push_back(item.name);
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write manifest in '" + dir + "'");
  out << manifest.dump(1) << '\n';
}

std::vector<CorpusEntry> load_corpus(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::io, "'" + dir + "' is not a directory");
  const std::string suffix = ".strokes.json";
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.size() > suffix.size() && file.compare(file.size() - suffix.size(), suffix.size(), suffix) == 0)
      names.push_back(file.substr(0, file.size() - suffix.size()));
  }
  std::sort(names.begin(), names.end());
  std::vector<CorpusEntry> out;
  for (const auto& name : names) {
    const fs::path base = fs::path(dir) / name;
    const std::string annotation = base.string() + ".annotation.json";
    if (!fs::exists(annotation)) fail(ErrorKind::data, "item " + name + " has no annotation");
    CorpusEntry e;
    e.name = name;
    e.strokes = load_strokes(base.string() + ".strokes.json", InkFormat::json);
    e.truth = load_annotation(annotation);
    std::set<int> ids;
    for (const auto& s : e.strokes.strokes) ids.insert(s.id);
    std::set<int> covered;
    for (const auto& s : e.truth.symbols)
      for (int id : s.stroke_ids) {
        if (!ids.count(id)) fail(ErrorKind::data, "item " + name + ": annotation names missing stroke " + std::to_string(id));
        covered.insert(id);
      }
    if (covered.size() != ids.size()) fail(ErrorKind::data, "item " + name + ": some strokes are not annotated");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace inkgraph
