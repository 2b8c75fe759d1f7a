// Command-line front end over the C interface.
#include "inkgraph/inkgraph.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

struct Overrides {
  std::string config_file;
  std::string grammar;
  std::optional<std::string> profile, scorer, annotation, baseline_corpus, candidate_order;
  std::optional<double> noise, t_symb, t_rel, t_junk, alpha, t_pr;
  std::optional<int> n_best, max_group, knn, rel_knn;
  std::optional<unsigned long long> seed, matching_budget;
  std::optional<bool> prune_junk, no_preprocess;
  bool no_pruning = false;
  bool strict = false;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "JSON config file; flags below override it");
  cmd->add_option("-g,--grammar", o.grammar, "grammar XML (or the config's \"grammar\")");
  cmd->add_option("--profile", o.profile, "math | flowchart (default math)");
  cmd->add_option("--scorer", o.scorer, "oracle | baseline (default oracle)");
  cmd->add_option("--noise", o.noise, "oracle noise in [0,1) (default 0)");
  cmd->add_option("--annotation", o.annotation, "ground truth for the oracle (default <input>.annotation.json)");
  cmd->add_option("--baseline-corpus", o.baseline_corpus, "corpus directory the baseline scorer is fitted on");
  cmd->add_option("--t-symb", o.t_symb, "symbol label pruning threshold (math .98, flowchart .95)");
  cmd->add_option("--t-rel", o.t_rel, "relation label pruning threshold (math .85, flowchart .95)");
  cmd->add_option("--t-junk", o.t_junk, "junk threshold for group pruning (default .25)");
  cmd->add_option("--alpha", o.alpha, "symbol/relation cost weight (math .4, flowchart .8)");
  cmd->add_option("--t-pr", o.t_pr, "relative tree pruning threshold (default .1)");
  cmd->add_option("--n-best", o.n_best, "trees to output (default 5)");
  cmd->add_option("--max-group", o.max_group, "largest stroke group proposed as a symbol (default 4)");
  cmd->add_option("--knn", o.knn, "neighbours used for symbol grouping (default 4)");
  cmd->add_option("--rel-knn", o.rel_knn, "neighbours used for relation candidates (default 12)");
  cmd->add_option("--candidate-order", o.candidate_order, "left_to_right | both");
  cmd->add_option("--matching-budget", o.matching_budget, "cap on matching search steps");
  cmd->add_option("--seed", o.seed, "seed (default 0)");
  cmd->add_flag("--junk-pruning,!--no-junk-pruning", o.prune_junk, "toggle junk-score group pruning");
  cmd->add_flag("--no-preprocess", o.no_preprocess, "skip smoothing and resampling");
  cmd->add_flag("--no-pruning", o.no_pruning, "disable size-bound and terminal-reachability pruning");
  cmd->add_flag("--strict-induced", o.strict, "reject matchings with extra relations between parts");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json build_config(const Overrides& o) {
  nlohmann::json c = nlohmann::json::object();
  if (!o.config_file.empty()) c = nlohmann::json::parse(read_file(o.config_file));
  auto set = [&](const char* key, const auto& v) {
    if (v) c[key] = *v;
  };
  if (!o.grammar.empty()) c["grammar"] = o.grammar;
  set("profile", o.profile);
  set("scorer", o.scorer);
  set("noise", o.noise);
  set("annotation", o.annotation);
  set("baseline_corpus", o.baseline_corpus);
  set("t_symb", o.t_symb);
  set("t_rel", o.t_rel);
  set("t_junk", o.t_junk);
  set("alpha", o.alpha);
  set("t_pr", o.t_pr);
  set("n_best", o.n_best);
  set("max_group", o.max_group);
  set("knn", o.knn);
  set("rel_knn", o.rel_knn);
  set("candidate_order", o.candidate_order);
  set("matching_budget", o.matching_budget);
  set("seed", o.seed);
  set("prune_junk", o.prune_junk);
  if (o.no_preprocess && *o.no_preprocess) c["preprocess"] = false;
  if (o.no_pruning) {
    c["prune_size_bounds"] = false;
    c["prune_terminal_reachability"] = false;
  }
  if (o.strict) c["strict_induced"] = true;
  return c;
}

int fail(int code) {
  std::cerr << "inkgraph: " << ig_last_error() << '\n';
  return code;
}

ig_grammar* open_grammar(const std::string& path, int& code) {
  ig_grammar* g = nullptr;
  if (path.empty()) {
    std::cerr << "inkgraph: no grammar given (use --grammar or the config's \"grammar\")\n";
    code = IG_ERR_OTHER;
    return nullptr;
  }
  code = ig_grammar_load(path.c_str(), &g);
  if (code != IG_OK) fail(code);
  return g;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recognize handwritten graphics by graph-grammar parsing"};
  app.require_subcommand(1);

  Overrides rec_opts, eval_opts, insp_opts;
  std::string rec_input, rec_output, eval_dir, eval_output, insp_input, insp_stage = "forest", insp_output;

  auto* rec = app.add_subcommand("recognize", "Print the n-best interpretations of a stroke file as JSON");
  rec->add_option("input", rec_input, "stroke file (.json or .inkml)")->required();
  rec->add_option("-o,--output", rec_output, "write the JSON here instead of stdout");
  add_run_options(rec, rec_opts);

  std::string gen_grammar, gen_dir, gen_profile = "math";
  int gen_count = 10, gen_max = 10;
  unsigned long long gen_seed = 0;
  auto* gen = app.add_subcommand("generate", "Sample a synthetic annotated corpus from a grammar");
  gen->add_option("-g,--grammar", gen_grammar, "grammar XML")->required();
  gen->add_option("-o,--out", gen_dir, "output directory")->required();
  gen->add_option("-n,--count", gen_count, "number of items (default 10)");
  gen->add_option("--max-symbols", gen_max, "symbol budget per item (default 10)");
  gen->add_option("--seed", gen_seed, "seed; item i uses seed + i (default 0)");
  gen->add_option("--profile", gen_profile, "geometry: math | flowchart (default math)");

  auto* ev = app.add_subcommand("eval", "Recognize every corpus item and report accuracy and recall");
  ev->add_option("corpus", eval_dir, "corpus directory")->required();
  ev->add_option("-o,--output", eval_output, "write the JSON report here");
  add_run_options(ev, eval_opts);

  auto* insp = app.add_subcommand("inspect", "Dump an intermediate structure");
  insp->add_option("input", insp_input, "stroke file")->required();
  insp->add_option("--stage", insp_stage, "hypotheses | stk | forest (default forest)");
  insp->add_option("-o,--output", insp_output, "write the dump here instead of stdout");
  add_run_options(insp, insp_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    int code = IG_OK;
    if (*gen) {
      ig_grammar* g = open_grammar(gen_grammar, code);
      if (!g) return code;
      code = ig_generate_corpus(g, gen_dir.c_str(), gen_count, gen_max, gen_seed, gen_profile.c_str());
      ig_grammar_free(g);
      return code == IG_OK ? 0 : fail(code);
    }

    Overrides& o = *rec ? rec_opts : (*ev ? eval_opts : insp_opts);
    const nlohmann::json cfg = build_config(o);
    const std::string cfg_text = cfg.dump();
    ig_grammar* g = open_grammar(cfg.value("grammar", std::string()), code);
    if (!g) return code;

    char* text = nullptr;
    char* table = nullptr;
    if (*rec) {
      code = ig_recognize(g, rec_input.c_str(), cfg_text.c_str(), &text);
      if (text) emit(text, rec_output.empty() ? cfg.value("output", std::string()) : rec_output);
      if (code != IG_OK) fail(code);
    } else if (*ev) {
      code = ig_evaluate(g, eval_dir.c_str(), cfg_text.c_str(), &text, &table);
      if (code == IG_OK) {
        std::cout << table;
        const std::string out = eval_output.empty() ? cfg.value("output", std::string()) : eval_output;
        if (!out.empty()) emit(text, out);
      } else {
        fail(code);
      }
    } else {
      code = ig_inspect(g, insp_input.c_str(), cfg_text.c_str(), insp_stage.c_str(), &text);
      if (code == IG_OK)
        emit(text, insp_output);
      else
        fail(code);
    }
    ig_string_free(text);
    ig_string_free(table);
    ig_grammar_free(g);
    return code;
  } catch (const std::exception& e) {
    std::cerr << "inkgraph: " << e.what() << '\n';
    return IG_ERR_OTHER;
  }
}
