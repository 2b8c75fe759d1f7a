#include "inkgraph/annotation.hpp"

#include "inkgraph/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace inkgraph {

namespace {
[[noreturn]] void fail(ErrorKind kind, const std::string& what) { throw Error(kind, "annotation", what); }
}  // namespace

int GroundTruth::find_symbol(const std::vector<int>& stroke_ids) const {
  for (std::size_t i = 0; i < symbols.size(); ++i)
    if (symbols[i].stroke_ids == stroke_ids) return static_cast<int>(i);
  return -1;
}

std::string GroundTruth::relation_label(int src_symbol, int dst_symbol) const {
  for (const auto& r : relations)
    if (r.src_symbol == src_symbol && r.dst_symbol == dst_symbol) return r.label;
  return {};
}

GroundTruth parse_annotation_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::parse, std::string("malformed JSON: ") + e.what());
  }
  GroundTruth truth;
  try {
    std::set<int> used;
    for (const auto& js : doc.at("symbols")) {
      GroundTruth::Symbol s;
      s.label = js.at("label").get<std::string>();
      s.stroke_ids = js.at("stroke_ids").get<std::vector<int>>();
      std::sort(s.stroke_ids.begin(), s.stroke_ids.end());
      if (s.stroke_ids.empty()) fail(ErrorKind::data, "symbol '" + s.label + "' has no strokes");
      for (int id : s.stroke_ids)
        if (!used.insert(id).second) fail(ErrorKind::data, "stroke " + std::to_string(id) + " is in two symbols");
      truth.symbols.push_back(std::move(s));
    }
    if (doc.contains("relations")) {
      for (const auto& jr : doc.at("relations")) {
        GroundTruth::Relation r;
        r.src_symbol = jr.at("src_symbol").get<int>();
        r.dst_symbol = jr.at("dst_symbol").get<int>();
        r.label = jr.at("label").get<std::string>();
        const int n = static_cast<int>(truth.symbols.size());
        if (r.src_symbol < 0 || r.src_symbol >= n || r.dst_symbol < 0 || r.dst_symbol >= n)
          fail(ErrorKind::data, "relation references a missing symbol");
        truth.relations.push_back(std::move(r));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("bad annotation structure: ") + e.what());
  }
  return truth;
}

GroundTruth load_annotation(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotation_json(buf.str());
}

std::string annotation_to_json(const GroundTruth& truth) {
  nlohmann::json doc;
  doc["symbols"] = nlohmann::json::array();
  for (const auto& s : truth.symbols) doc["symbols"].push_back({{"label", s.label}, {"stroke_ids", s.stroke_ids}});
  doc["relations"] = nlohmann::json::array();
  for (const auto& r : truth.relations)
    doc["relations"].push_back({{"src_symbol", r.src_symbol}, {"dst_symbol", r.dst_symbol}, {"label", r.label}});
  return doc.dump();
}

void save_annotation(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  out << annotation_to_json(truth) << '\n';
}

}  // namespace inkgraph
