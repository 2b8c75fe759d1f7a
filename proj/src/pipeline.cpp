#include "inkgraph/pipeline.hpp"

#include "inkgraph/error.hpp"
#include "inkgraph/synth.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace inkgraph {

using nlohmann::json;

namespace {
constexpr std::string_view kModule = "config";

[[noreturn]] void fail(ErrorKind kind, const std::string& what) { throw Error(kind, kModule, what); }

std::string_view order_name(CandidateOrder o) { return o == CandidateOrder::both ? "both" : "left_to_right"; }
}  // namespace

RunConfig RunConfig::defaults(std::string_view profile) {
  RunConfig c;
  c.profile = std::string(profile);
  if (profile == "math") {
    c.hypotheses.t_symb = 0.98;
    c.hypotheses.t_rel = 0.85;
    c.hypotheses.order = CandidateOrder::left_to_right;
    c.cost.alpha = 0.4;
    c.cost.t_pr = 0.1;
    c.parser.prune_junk = false;
  } else if (profile == "flowchart") {
    c.hypotheses.t_symb = 0.95;
    c.hypotheses.t_rel = 0.95;
    c.hypotheses.order = CandidateOrder::both;
    c.cost.alpha = 0.8;
    c.cost.t_pr = 0.1;
    c.parser.prune_junk = true;
    c.parser.t_junk = 0.25;
  } else {
    fail(ErrorKind::argument, "unknown profile '" + std::string(profile) + "'");
  }
  return c;
}

void RunConfig::validate() const {
  auto unit = [](double v, bool open_low) { return open_low ? (v > 0.0 && v <= 1.0) : (v >= 0.0 && v <= 1.0); };
  if (profile != "math" && profile != "flowchart") fail(ErrorKind::argument, "profile must be math or flowchart");
  if (scorer != "oracle" && scorer != "baseline") fail(ErrorKind::argument, "scorer must be oracle or baseline");
  if (!(noise >= 0.0 && noise < 1.0)) fail(ErrorKind::argument, "noise must lie in [0,1)");
  if (!unit(hypotheses.t_symb, true) || !unit(hypotheses.t_rel, true))
    fail(ErrorKind::argument, "t_symb and t_rel must lie in (0,1]");
  if (hypotheses.max_group < 1 || hypotheses.knn < 1 || hypotheses.rel_knn < 1)
    fail(ErrorKind::argument, "max_group, knn and rel_knn must be positive");
  if (!unit(parser.t_junk, false)) fail(ErrorKind::argument, "t_junk must lie in [0,1]");
  if (parser.junk_min_hyps < 1) fail(ErrorKind::argument, "junk_min_hyps must be positive");
  if (!unit(cost.alpha, false) || !unit(cost.t_pr, false)) fail(ErrorKind::argument, "alpha and t_pr must lie in [0,1]");
  if (!(cost.score_floor > 0.0)) fail(ErrorKind::argument, "score_floor must be positive");
  if (n_best < 1) fail(ErrorKind::argument, "n_best must be positive");
  if (smooth_window < 1 || smooth_window % 2 == 0) fail(ErrorKind::argument, "smooth_window must be odd and positive");
}

RunConfig config_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::parse, std::string("malformed config JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::parse, "config must be a JSON object");
  RunConfig c = RunConfig::defaults(doc.value("profile", std::string("math")));
  static const std::set<std::string> known = {
      "grammar",    "profile",       "scorer",     "noise",         "annotation",
      "baseline_corpus", "t_symb",   "t_rel",      "max_group",     "knn",
      "rel_knn",    "candidate_order", "t_junk",   "junk_min_hyps", "prune_size_bounds",
      "prune_terminal_reachability", "prune_junk", "strict_induced", "matching_budget",
      "stk_budget", "alpha",         "t_pr",       "score_floor",   "n_best",
      "preprocess", "smooth_window", "resample_spacing", "seed",    "output"};
  for (const auto& [key, _] : doc.items())
    if (!known.count(key)) fail(ErrorKind::argument, "unknown config field '" + key + "'");
  try {
    auto get = [&](const char* key, auto& target) {
      if (doc.contains(key)) target = doc.at(key).get<std::decay_t<decltype(target)>>();
    };
    get("grammar", c.grammar);
    get("scorer", c.scorer);
    get("noise", c.noise);
    get("annotation", c.annotation);
    get("baseline_corpus", c.baseline_corpus);
    get("t_symb", c.hypotheses.t_symb);
    get("t_rel", c.hypotheses.t_rel);
    get("max_group", c.hypotheses.max_group);
    get("knn", c.hypotheses.knn);
    get("rel_knn", c.hypotheses.rel_knn);
    if (doc.contains("candidate_order")) {
      const auto order = doc.at("candidate_order").get<std::string>();
      if (order == "both")
        c.hypotheses.order = CandidateOrder::both;
      else if (order == "left_to_right")
        c.hypotheses.order = CandidateOrder::left_to_right;
      else
        fail(ErrorKind::argument, "candidate_order must be left_to_right or both");
    }
    get("t_junk", c.parser.t_junk);
    get("junk_min_hyps", c.parser.junk_min_hyps);
    get("prune_size_bounds", c.parser.prune_size_bounds);
    get("prune_terminal_reachability", c.parser.prune_terminal_reachability);
    get("prune_junk", c.parser.prune_junk);
    get("strict_induced", c.parser.strict_induced);
    if (doc.contains("matching_budget") && !doc.at("matching_budget").is_null())
      c.parser.matching_budget = doc.at("matching_budget").get<std::size_t>();
    get("stk_budget", c.parser.stk_budget);
    get("alpha", c.cost.alpha);
    get("t_pr", c.cost.t_pr);
    get("score_floor", c.cost.score_floor);
    get("n_best", c.n_best);
    get("preprocess", c.preprocess);
    get("smooth_window", c.smooth_window);
    get("resample_spacing", c.resample_spacing);
    get("seed", c.seed);
    get("output", c.output);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const RunConfig& c) {
  json doc{{"grammar", c.grammar},
           {"profile", c.profile},
           {"scorer", c.scorer},
           {"noise", c.noise},
           {"annotation", c.annotation},
           {"baseline_corpus", c.baseline_corpus},
           {"t_symb", c.hypotheses.t_symb},
           {"t_rel", c.hypotheses.t_rel},
           {"max_group", c.hypotheses.max_group},
           {"knn", c.hypotheses.knn},
           {"rel_knn", c.hypotheses.rel_knn},
           {"candidate_order", std::string(order_name(c.hypotheses.order))},
           {"t_junk", c.parser.t_junk},
           {"junk_min_hyps", c.parser.junk_min_hyps},
           {"prune_size_bounds", c.parser.prune_size_bounds},
           {"prune_terminal_reachability", c.parser.prune_terminal_reachability},
           {"prune_junk", c.parser.prune_junk},
           {"strict_induced", c.parser.strict_induced},
           {"matching_budget", c.parser.matching_budget ? json(*c.parser.matching_budget) : json(nullptr)},
           {"stk_budget", c.parser.stk_budget},
           {"alpha", c.cost.alpha},
           {"t_pr", c.cost.t_pr},
           {"score_floor", c.cost.score_floor},
           {"n_best", c.n_best},
           {"preprocess", c.preprocess},
           {"smooth_window", c.smooth_window},
           {"resample_spacing", c.resample_spacing},
           {"seed", c.seed},
           {"output", c.output}};
  return doc.dump(2);
}

std::string default_annotation_path(const std::string& strokes_path) {
  const std::string suffix = ".strokes.json";
  if (strokes_path.size() > suffix.size() &&
      strokes_path.compare(strokes_path.size() - suffix.size(), suffix.size(), suffix) == 0)
    return strokes_path.substr(0, strokes_path.size() - suffix.size()) + ".annotation.json";
  const auto dot = strokes_path.find_last_of('.');
  const auto slash = strokes_path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? strokes_path.substr(0, dot) : strokes_path) + ".annotation.json";
}

StrokeSet prepare_strokes(const StrokeSet& raw, const RunConfig& cfg) {
  validate(raw);
  return cfg.preprocess ? preprocess(raw, cfg.smooth_window, cfg.resample_spacing) : raw;
}

std::unique_ptr<BaselineScorer> fit_baseline(const RunConfig& cfg) {
  if (cfg.baseline_corpus.empty()) fail(ErrorKind::argument, "the baseline scorer needs baseline_corpus");
  std::vector<BaselineScorer::Sample> samples;
  for (auto& entry : load_corpus(cfg.baseline_corpus))
    samples.push_back({prepare_strokes(entry.strokes, cfg), std::move(entry.truth)});
  auto scorer = std::make_unique<BaselineScorer>();
  scorer->fit(samples);
  return scorer;
}

std::unique_ptr<Scorer> make_scorer(const RunConfig& cfg, const GraphicGrammar& g, const GroundTruth* truth) {
  if (cfg.scorer == "baseline") return fit_baseline(cfg);
  if (!truth) fail(ErrorKind::argument, "the oracle scorer needs a ground-truth annotation");
  std::vector<std::string> symbols(g.terminals.begin(), g.terminals.end());
  std::vector<std::string> relations(g.relation_labels.begin(), g.relation_labels.end());
  return std::make_unique<OracleScorer>(*truth, symbols, relations, cfg.noise, cfg.seed);
}

Recognition recognize(const GraphicGrammar& g, const StrokeSet& raw, const Scorer& scorer, const RunConfig& cfg) {
  cfg.validate();
  Recognition r;
  r.strokes = prepare_strokes(raw, cfg);
  if (r.strokes.empty()) fail(ErrorKind::argument, "input has no strokes");
  r.hypotheses = build_hypotheses_graph(r.strokes, scorer, cfg.hypotheses);
  finish_recognition(g, r, cfg);
  return r;
}

void finish_recognition(const GraphicGrammar& g, Recognition& r, const RunConfig& cfg) {
  r.forest = parse_input(g, r.hypotheses, cfg.parser);
  r.trees = extract_trees(r.forest, cfg.cost, static_cast<std::size_t>(cfg.n_best));
  const bool text = g.has_templates();
  for (const auto& t : r.trees) r.interpretations.push_back(render(t, g, r.hypotheses, text));
}

std::string recognition_to_json(const Recognition& r) {
  json trees = json::array();
  for (std::size_t i = 0; i < r.trees.size(); ++i) {
    const auto& t = r.trees[i];
    const auto& in = r.interpretations[i];
    json symbols = json::array();
    for (const auto& s : in.symbols) symbols.push_back({{"label", s.label}, {"stroke_ids", s.stroke_ids}, {"score", s.score}});
    json relations = json::array();
    for (const auto& rel : in.relations)
      relations.push_back({{"src", rel.src}, {"dst", rel.dst}, {"label", rel.label}, {"score", rel.score}});
    json tree{{"cost", {{"J", t.J}, {"J_s", t.J_s}, {"J_r", t.J_r}, {"n_s", t.n_s}, {"n_r", t.n_r}}},
              {"symbols", symbols},
              {"relations", relations}};
    if (in.text) tree["rendered"] = *in.text;
    trees.push_back(std::move(tree));
  }
  const auto& s = r.forest.stats;
  json stats{{"hypotheses", {{"symbols", r.hypotheses.vertices.size()}, {"relations", r.hypotheses.edges.size()}}},
             {"stk_groups", s.stk_groups},
             {"forest_nodes", r.forest.nodes.size()},
             {"memo_hits", s.memo_hits},
             {"memo_misses", s.memo_misses},
             {"matchings_examined", s.matchings_examined},
             {"pruned", {{"size", s.pruned_size}, {"terminals", s.pruned_terminals}, {"junk", s.pruned_junk}}}};
  return json{{"trees", trees}, {"stats", stats}}.dump(2);
}

InspectStage parse_stage(std::string_view name) {
  if (name == "hypotheses") return InspectStage::hypotheses;
  if (name == "stk") return InspectStage::stk;
  if (name == "forest") return InspectStage::forest;
  fail(ErrorKind::argument, "unknown stage '" + std::string(name) + "' (expected hypotheses, stk or forest)");
}

std::string inspect(const GraphicGrammar& g, const StrokeSet& raw, const Scorer& scorer, const RunConfig& cfg,
                    InspectStage stage) {
  cfg.validate();
  const StrokeSet strokes = prepare_strokes(raw, cfg);
  const HypothesesGraph h = build_hypotheses_graph(strokes, scorer, cfg.hypotheses);
  if (stage == InspectStage::hypotheses) return h.dump();
  if (strokes.empty()) fail(ErrorKind::argument, "input has no strokes");
  Parser parser(g, h, cfg.parser);
  if (stage == InspectStage::stk) {
    parser.stk().whole_input();
    return parser.stk().dump();
  }
  return parser.run().dump();
}

}  // namespace inkgraph
