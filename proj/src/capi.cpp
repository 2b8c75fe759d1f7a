#include "inkgraph/inkgraph.h"

#include "inkgraph/error.hpp"
#include "inkgraph/eval.hpp"
#include "inkgraph/pipeline.hpp"
#include "inkgraph/synth.hpp"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

struct ig_grammar {
  inkgraph::GraphicGrammar grammar;
};

namespace {

thread_local std::string last_error;

int status_of(inkgraph::ErrorKind kind) {
  using inkgraph::ErrorKind;
  switch (kind) {
    case ErrorKind::budget:
      return IG_ERR_BUDGET;
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::embedding:
    case ErrorKind::scorer_contract:
    case ErrorKind::rendering:
    case ErrorKind::data:
      return IG_ERR_INVALID;
    default:
      return IG_ERR_OTHER;
  }
}

template <typename F>
int guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const inkgraph::BudgetError& e) {
    last_error = e.what();
    return IG_ERR_BUDGET;
  } catch (const inkgraph::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return IG_ERR_OTHER;
  }
}

char* copy_out(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

inkgraph::RunConfig read_config(const char* json) {
  if (!json || !*json) return inkgraph::RunConfig::defaults("math");
  return inkgraph::config_from_json(json);
}

void require(bool ok, const char* what) {
  if (!ok) throw inkgraph::Error(inkgraph::ErrorKind::argument, "capi", what);
}

std::unique_ptr<inkgraph::Scorer> scorer_for(const inkgraph::RunConfig& cfg, const inkgraph::GraphicGrammar& g,
                                             const std::string& strokes_path, inkgraph::GroundTruth& truth) {
  if (cfg.scorer == "oracle") {
    const std::string path = cfg.annotation.empty() ? inkgraph::default_annotation_path(strokes_path) : cfg.annotation;
    truth = inkgraph::load_annotation(path);
    return inkgraph::make_scorer(cfg, g, &truth);
  }
  return inkgraph::make_scorer(cfg, g, nullptr);
}

}  // namespace

extern "C" {

const char* ig_version(void) { return "0.1.0"; }

const char* ig_last_error(void) { return last_error.c_str(); }

void ig_string_free(char* s) { std::free(s); }

int ig_grammar_load(const char* path, ig_grammar** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = nullptr;
    auto handle = std::make_unique<ig_grammar>();
    handle->grammar = inkgraph::load_grammar(path);
    *out = handle.release();
    return IG_OK;
  });
}

void ig_grammar_free(ig_grammar* g) { delete g; }

int ig_grammar_rule_count(const ig_grammar* g) { return g ? static_cast<int>(g->grammar.rules.size()) : -1; }

int ig_config_defaults(const char* profile, char** out_json) {
  return guarded([&] {
    require(profile && out_json, "null argument");
    *out_json = copy_out(inkgraph::config_to_json(inkgraph::RunConfig::defaults(profile)));
    return IG_OK;
  });
}

int ig_recognize(const ig_grammar* g, const char* strokes_path, const char* config_json, char** out_json) {
  return guarded([&] {
    require(g && strokes_path && out_json, "null argument");
    *out_json = nullptr;
    const auto cfg = read_config(config_json);
    const auto strokes = inkgraph::load_strokes(strokes_path);
    inkgraph::GroundTruth truth;
    const auto scorer = scorer_for(cfg, g->grammar, strokes_path, truth);
    const auto result = inkgraph::recognize(g->grammar, strokes, *scorer, cfg);
    *out_json = copy_out(inkgraph::recognition_to_json(result));
    if (result.trees.empty()) {
      last_error = "parser: no interpretation of the input under the grammar";
      return IG_ERR_NO_INTERPRETATION;
    }
    return IG_OK;
  });
}

int ig_inspect(const ig_grammar* g, const char* strokes_path, const char* config_json, const char* stage,
               char** out_text) {
  return guarded([&] {
    require(g && strokes_path && stage && out_text, "null argument");
    *out_text = nullptr;
    const auto which = inkgraph::parse_stage(stage);
    const auto cfg = read_config(config_json);
    const auto strokes = inkgraph::load_strokes(strokes_path);
    inkgraph::GroundTruth truth;
    const auto scorer = scorer_for(cfg, g->grammar, strokes_path, truth);
    *out_text = copy_out(inkgraph::inspect(g->grammar, strokes, *scorer, cfg, which));
    return IG_OK;
  });
}

int ig_generate_corpus(const ig_grammar* g, const char* out_dir, int count, int max_symbols, unsigned long long seed,
                       const char* profile) {
  return guarded([&] {
    require(g && out_dir && profile, "null argument");
    const auto p = inkgraph::parse_profile(profile);
    const auto items = inkgraph::generate_corpus(g->grammar, count, max_symbols, seed, p);
    inkgraph::write_corpus(items, out_dir, g->grammar.name, max_symbols, seed, p);
    return IG_OK;
  });
}

int ig_evaluate(const ig_grammar* g, const char* corpus_dir, const char* config_json, char** out_report_json,
                char** out_table) {
  return guarded([&] {
    require(g && corpus_dir && out_report_json, "null argument");
    *out_report_json = nullptr;
    if (out_table) *out_table = nullptr;
    const auto cfg = read_config(config_json);
    const auto report = inkgraph::evaluate(g->grammar, inkgraph::load_corpus(corpus_dir), cfg);
    *out_report_json = copy_out(report.to_json());
    if (out_table) *out_table = copy_out(report.table());
    return IG_OK;
  });
}

}  // extern "C"
