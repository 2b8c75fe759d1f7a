#include "inkgraph/eval.hpp"

#include "inkgraph/error.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

namespace inkgraph {

namespace {

double percent(double num, double den) { return den > 0.0 ? 100.0 * num / den : 100.0; }

}  // namespace

ItemScore score_item(const GroundTruth& truth, const Interpretation* output) {
  ItemScore s;
  s.gt_symbols = static_cast<int>(truth.symbols.size());
  s.gt_relations = static_cast<int>(truth.relations.size());
  static const Interpretation empty;
  const Interpretation& out = output ? *output : empty;

  // Segmentation match by identical stroke sets.
  std::vector<int> out_of_gt(truth.symbols.size(), -1), gt_of_out(out.symbols.size(), -1);
  for (std::size_t i = 0; i < truth.symbols.size(); ++i)
    for (std::size_t j = 0; j < out.symbols.size(); ++j)
      if (gt_of_out[j] < 0 && out.symbols[j].stroke_ids == truth.symbols[i].stroke_ids) {
        out_of_gt[i] = static_cast<int>(j);
        gt_of_out[j] = static_cast<int>(i);
        break;
      }

  std::map<int, std::string> out_label_of_stroke;
  for (const auto& sym : out.symbols)
    for (int id : sym.stroke_ids) out_label_of_stroke[id] = sym.label;
  for (const auto& sym : truth.symbols)
    for (int id : sym.stroke_ids) {
      ++s.strokes;
      auto it = out_label_of_stroke.find(id);
      if (it != out_label_of_stroke.end() && it->second == sym.label) ++s.strokes_correct;
    }

  for (std::size_t i = 0; i < truth.symbols.size(); ++i) {
    if (out_of_gt[i] < 0) {
      ++s.errors;
    } else if (out.symbols[out_of_gt[i]].label == truth.symbols[i].label) {
      ++s.symbols_correct;
    } else {
      ++s.errors;
    }
  }
  for (int g : gt_of_out)
    if (g < 0) ++s.errors;

  // Relations over ordered pairs of matched symbols, keyed by ground-truth indices.
  std::map<std::pair<int, int>, std::string> gt_rel, out_rel;
  for (const auto& r : truth.relations) gt_rel[{r.src_symbol, r.dst_symbol}] = r.label;
  for (const auto& r : out.relations) {
    if (r.src_symbol < 0 || r.dst_symbol < 0) {
      ++s.errors;
      continue;
    }
    const int a = gt_of_out[r.src_symbol], b = gt_of_out[r.dst_symbol];
    if (a >= 0 && b >= 0) out_rel[{a, b}] = r.label;
  }
  std::map<std::pair<int, int>, std::pair<std::string, std::string>> pairs;
  for (const auto& [k, l] : gt_rel)
    if (out_of_gt[k.first] >= 0 && out_of_gt[k.second] >= 0) pairs[k].first = l;
  for (const auto& [k, l] : out_rel) pairs[k].second = l;
  for (const auto& [k, labels] : pairs) {
    if (labels.first != labels.second)
      ++s.errors;
    else
      ++s.relations_correct;
  }
  return s;
}

HypothesesRecall hypotheses_recall(const GroundTruth& truth, const HypothesesGraph& h) {
  HypothesesRecall r;
  std::vector<int> vertex(truth.symbols.size(), -1);
  for (std::size_t i = 0; i < truth.symbols.size(); ++i) {
    const int v = h.find_vertex(truth.symbols[i].stroke_ids);
    if (v < 0) continue;
    vertex[i] = v;
    for (const auto& ls : h.vertices[v].labels)
      if (ls.label == truth.symbols[i].label) {
        ++r.symbols;
        break;
      }
  }
  for (const auto& rel : truth.relations) {
    const int a = vertex[rel.src_symbol], b = vertex[rel.dst_symbol];
    if (a < 0 || b < 0) continue;
    const auto* e = h.find_edge(a, b);
    if (!e) continue;
    for (const auto& ls : e->labels)
      if (ls.label == rel.label) {
        ++r.relations;
        break;
      }
  }
  r.expression = r.symbols == static_cast<int>(truth.symbols.size()) &&
                 r.relations == static_cast<int>(truth.relations.size());
  return r;
}

EvalReport evaluate(const GraphicGrammar& g, const std::vector<CorpusEntry>& corpus, const RunConfig& cfg) {
  cfg.validate();
  EvalReport report;
  report.items = corpus.size();
  std::unique_ptr<Scorer> shared;
  if (cfg.scorer == "baseline") shared = fit_baseline(cfg);

  long long strokes = 0, strokes_ok = 0, symbols = 0, symbols_ok = 0, relations = 0, relations_ok = 0;
  long long hyp_symbols = 0, hyp_relations = 0, hyp_expressions = 0;
  std::array<long long, 4> within{};
  for (const auto& item : corpus) {
    ItemResult res;
    res.name = item.name;
    std::unique_ptr<Scorer> own;
    const Scorer* scorer = shared.get();
    if (!scorer) {
      own = make_scorer(cfg, g, &item.truth);
      scorer = own.get();
    }
    // Hypotheses recall is taken before parsing so a parse budget cannot hide it.
    Recognition rec;
    bool parsed = false;
    try {
      rec.strokes = prepare_strokes(item.strokes, cfg);
      if (rec.strokes.empty()) throw Error(ErrorKind::argument, "eval", "input has no strokes");
      rec.hypotheses = build_hypotheses_graph(rec.strokes, *scorer, cfg.hypotheses);
      const HypothesesRecall hr = hypotheses_recall(item.truth, rec.hypotheses);
      hyp_symbols += hr.symbols;
      hyp_relations += hr.relations;
      hyp_expressions += hr.expression ? 1 : 0;
      res.hypotheses_complete = hr.expression;
      finish_recognition(g, rec, cfg);
      parsed = true;
    } catch (const BudgetError&) {
      res.budget_exceeded = true;
      ++report.budget_exceeded;
    } catch (const Error& e) {
      throw Error(e.kind(), "eval", "item " + item.name + ": " + e.what());
    }
    symbols += static_cast<long long>(item.truth.symbols.size());
    relations += static_cast<long long>(item.truth.relations.size());
    for (const auto& s : item.truth.symbols) strokes += static_cast<long long>(s.stroke_ids.size());
    if (parsed) {
      const auto& st = rec.forest.stats;
      auto& c = report.counters;
      c.memo_hits += st.memo_hits;
      c.memo_misses += st.memo_misses;
      c.keys_computed += st.keys_computed;
      c.max_computations_per_key = std::max(c.max_computations_per_key, st.max_computations_per_key);
      c.matchings_examined += st.matchings_examined;
      c.search_steps += st.search_steps;
      c.pruned_size += st.pruned_size;
      c.pruned_terminals += st.pruned_terminals;
      c.pruned_junk += st.pruned_junk;
      c.stk_groups += st.stk_groups;
      res.interpreted = !rec.interpretations.empty();
      if (!res.interpreted) ++report.no_interpretation;
      const ItemScore sc = score_item(item.truth, res.interpreted ? &rec.interpretations.front() : nullptr);
      strokes_ok += sc.strokes_correct;
      symbols_ok += sc.symbols_correct;
      relations_ok += sc.relations_correct;
      res.errors = sc.errors;
      for (int k = 0; k < 4; ++k)
        if (sc.errors <= k) ++within[k];
    }
    report.per_item.push_back(std::move(res));
  }
  const double n = static_cast<double>(corpus.size());
  report.stroke_accuracy = percent(static_cast<double>(strokes_ok), static_cast<double>(strokes));
  report.symbol_accuracy = percent(static_cast<double>(symbols_ok), static_cast<double>(symbols));
  report.relation_accuracy = percent(static_cast<double>(relations_ok), static_cast<double>(relations));
  for (int k = 0; k < 4; ++k) report.recall[k] = percent(static_cast<double>(within[k]), n);
  report.hyp_symbol_recall = percent(static_cast<double>(hyp_symbols), static_cast<double>(symbols));
  report.hyp_relation_recall = percent(static_cast<double>(hyp_relations), static_cast<double>(relations));
  report.hyp_expression_recall = percent(static_cast<double>(hyp_expressions), n);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json items_json = nlohmann::json::array();
  for (const auto& r : per_item)
    items_json.push_back({{"name", r.name},
                          {"interpreted", r.interpreted},
                          {"budget_exceeded", r.budget_exceeded},
                          {"errors", r.errors},
                          {"hypotheses_complete", r.hypotheses_complete}});
  nlohmann::json doc{
      {"items", items},
      {"stroke_accuracy", stroke_accuracy},
      {"symbol_accuracy", symbol_accuracy},
      {"relation_accuracy", relation_accuracy},
      {"recall", {{"le0", recall[0]}, {"le1", recall[1]}, {"le2", recall[2]}, {"le3", recall[3]}}},
      {"hypotheses_recall", {{"symbol", hyp_symbol_recall}, {"relation", hyp_relation_recall}, {"expression", hyp_expression_recall}}},
      {"no_interpretation", no_interpretation},
      {"budget_exceeded", budget_exceeded},
      {"counters",
       {{"memo_hits", counters.memo_hits},
        {"memo_misses", counters.memo_misses},
        {"keys_computed", counters.keys_computed},
        {"matchings_examined", counters.matchings_examined},
        {"search_steps", counters.search_steps},
        {"pruned_size", counters.pruned_size},
        {"pruned_terminals", counters.pruned_terminals},
        {"pruned_junk", counters.pruned_junk},
        {"stk_groups", counters.stk_groups}}},
      {"per_item", items_json}};
  return doc.dump(2);
}

std::string EvalReport::table() const {
  std::ostringstream out;
  char line[128];
  auto row = [&](const char* name, double v) {
    std::snprintf(line, sizeof line, "%-28s %8.2f\n", name, v);
    out << line;
  };
  out << "items                        " << items << '\n';
  row("stroke labeling (%)", stroke_accuracy);
  row("symbol labeling (%)", symbol_accuracy);
  row("relations (%)", relation_accuracy);
  row("recall <=0 errors (%)", recall[0]);
  row("recall <=1 errors (%)", recall[1]);
  row("recall <=2 errors (%)", recall[2]);
  row("recall <=3 errors (%)", recall[3]);
  row("H symbol recall (%)", hyp_symbol_recall);
  row("H relation recall (%)", hyp_relation_recall);
  row("H expression recall (%)", hyp_expression_recall);
  out << "no interpretation            " << no_interpretation << '\n';
  out << "budget exceeded              " << budget_exceeded << '\n';
  out << "matchings examined           " << counters.matchings_examined << '\n';
  return out.str();
}

}  // namespace inkgraph
