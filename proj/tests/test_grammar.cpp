#include "doctest.h"
#include "support.hpp"

#include "inkgraph/error.hpp"
#include "inkgraph/grammar.hpp"

#include <deque>

using namespace inkgraph;
using support::math_grammar;

namespace {

std::string grammar_xml(const std::string& body, const std::string& terminals, const std::string& rels = "h w",
                        const std::string& attrs = R"(initial="I")") {
  std::string out = "<grammar " + attrs + "><relations>";
  std::istringstream r(rels);
  for (std::string x; r >> x;) out += "<rel name=\"" + x + "\"/>";
  out += "</relations><terminals>";
  std::istringstream t(terminals);
  for (std::string x; t >> x;) out += "<t name=\"" + x + "\"/>";
  return out + "</terminals>" + body + "</grammar>";
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::state;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

LabeledGraph graph(std::vector<LabeledGraph::Vertex> vs, std::vector<LabeledGraph::Edge> es) {
  LabeledGraph g;
  g.vertices = std::move(vs);
  g.edges = std::move(es);
  return g;
}

}  // namespace

TEST_CASE("math grammar loads") {
  const auto& g = math_grammar();
  CHECK(g.initial == "ME");
  CHECK(g.nonterminals == std::set<std::string>{"ME", "TRM", "OP", "CHAR"});
  CHECK(g.relation_labels == std::set<std::string>{"sp", "sb", "h"});
  CHECK(g.embedding == EmbeddingKind::baseline_chain);
  CHECK(g.terminals.size() == 66);
  CHECK(g.rules.size() == 72);
  CHECK(g.rule("r-1").kind == RuleKind::nonterminal);
  CHECK(g.rule("r-7").kind == RuleKind::terminal);
  CHECK(g.rule("r-1").baseline_first == 0);
  CHECK(g.rule("r-1").baseline_last == 2);
  CHECK(g.has_templates());
}

TEST_CASE("size bounds") {
  const auto b = compute_size_bounds(math_grammar());
  CHECK(b.at("CHAR") == SymbolRange{1, 1});
  CHECK(b.at("OP") == SymbolRange{1, 1});
  CHECK(b.at("ME") == SymbolRange{1, std::nullopt});
  CHECK(b.at("TRM") == SymbolRange{1, std::nullopt});

  auto single = parse_grammar_xml(grammar_xml(R"(<rule id="a" lhs="I"><vertex id="0" label="a"/></rule>)", "a"));
  CHECK(compute_size_bounds(single).at("I") == SymbolRange{1, 1});

  // Fixed-size chain: I := A h A, A := a | b
  auto fixed = parse_grammar_xml(grammar_xml(R"(
      <rule id="1" lhs="I"><vertex id="0" label="A"/><vertex id="1" label="A"/><edge src="0" dst="1" label="h"/></rule>
      <rule id="2" lhs="A"><vertex id="0" label="a"/></rule>
      <rule id="3" lhs="A"><vertex id="0" label="B"/><vertex id="1" label="B"/><edge src="0" dst="1" label="h"/></rule>
      <rule id="4" lhs="B"><vertex id="0" label="b"/></rule>)",
                                             "a b"));
  CHECK(compute_size_bounds(fixed).at("I") == SymbolRange{2, 4});
  CHECK(compute_size_bounds(fixed).at("A") == SymbolRange{1, 2});
}

TEST_CASE("reachable terminals") {
  const auto& g = math_grammar();
  CHECK(reachable_terminals(g, "OP") == std::set<std::string>{"+", "-", "<", ">"});
  CHECK(reachable_terminals(g, "ME") == g.terminals);
  CHECK(reachable_terminals(g, "CHAR").count("+") == 0);
  CHECK(kind_of([&] { reachable_terminals(g, "nope"); }) == ErrorKind::argument);
}

TEST_CASE("reachable terminals agree with exhaustive derivation") {
  // z is declared but only reachable from C.
  auto g = parse_grammar_xml(grammar_xml(R"(
      <rule id="1" lhs="I"><vertex id="0" label="A"/><vertex id="1" label="B"/><edge src="0" dst="1" label="h"/></rule>
      <rule id="2" lhs="I"><vertex id="0" label="C"/></rule>
      <rule id="3" lhs="A"><vertex id="0" label="x"/></rule>
      <rule id="4" lhs="A"><vertex id="0" label="B"/><vertex id="1" label="A"/><edge src="0" dst="1" label="w"/></rule>
      <rule id="5" lhs="B"><vertex id="0" label="y"/></rule>
      <rule id="6" lhs="C"><vertex id="0" label="z"/></rule>)",
                                         "x y z"));
  const auto ctx = embedding_context(g);
  for (const auto& nt : g.nonterminals) {
    std::set<std::string> seen;
    std::deque<std::pair<LabeledGraph, int>> todo{{graph({{0, nt}}, {}), 0}};
    while (!todo.empty()) {
      auto [host, depth] = todo.front();
      todo.pop_front();
      bool done = true;
      for (const auto& v : host.vertices) {
        if (g.is_terminal(v.label)) continue;
        done = false;
        if (depth == 6) continue;
        for (int ri : g.rules_for(v.label)) todo.push_back({apply_rule(host, v.id, g.rules[ri], ctx), depth + 1});
      }
      if (done)
        for (const auto& v : host.vertices) seen.insert(v.label);
    }
    CHECK_MESSAGE(reachable_terminals(g, nt) == seen, nt);
  }
  CHECK(reachable_terminals(g, "A").count("z") == 0);
}

TEST_CASE("validation errors") {
  auto disconnected = grammar_xml(
      R"(<rule id="bad" lhs="I"><vertex id="0" label="a"/><vertex id="1" label="a"/></rule>
         <rule id="ok" lhs="I"><vertex id="0" label="a"/></rule>)",
      "a");
  CHECK(kind_of([&] { parse_grammar_xml(disconnected); }) == ErrorKind::validation);
  CHECK(message_of([&] { parse_grammar_xml(disconnected); }).find("rule bad: rhs not connected") != std::string::npos);

  auto unproductive = grammar_xml(R"(<rule id="1" lhs="I"><vertex id="0" label="I"/><vertex id="1" label="a"/>
      <edge src="0" dst="1" label="h"/></rule>)",
                                  "a");
  CHECK(kind_of([&] { parse_grammar_xml(unproductive); }) == ErrorKind::validation);

  auto unreachable = grammar_xml(R"(<nonterminals><nt name="Q"/></nonterminals>
      <rule id="1" lhs="I"><vertex id="0" label="a"/></rule><rule id="2" lhs="Q"><vertex id="0" label="a"/></rule>)",
                                 "a");
  CHECK(message_of([&] { parse_grammar_xml(unreachable); }).find("unreachable nonterminals: Q") != std::string::npos);

  auto unknown_rel = grammar_xml(R"(<rule id="1" lhs="I"><vertex id="0" label="a"/><vertex id="1" label="a"/>
      <edge src="0" dst="1" label="zz"/></rule>)",
                                 "a");
  CHECK(kind_of([&] { parse_grammar_xml(unknown_rel); }) == ErrorKind::validation);

  auto no_initial = grammar_xml(R"(<rule id="1" lhs="J"><vertex id="0" label="a"/></rule>)", "a", "h",
                                R"(initial="a")");
  CHECK(kind_of([&] { parse_grammar_xml(no_initial); }) == ErrorKind::validation);

  CHECK(kind_of([&] { parse_grammar_xml("<grammar initial='I'><rule id='1' lhs='I'>"); }) == ErrorKind::parse);
  CHECK(kind_of([&] {
          parse_grammar_xml(grammar_xml(R"(<rule id="1" lhs="I" color="red"><vertex id="0" label="a"/></rule>)", "a"));
        }) == ErrorKind::parse);

  auto unit_cycle = grammar_xml(R"(<rule id="1" lhs="I"><vertex id="0" label="A"/></rule>
      <rule id="2" lhs="A"><vertex id="0" label="I"/></rule><rule id="3" lhs="A"><vertex id="0" label="a"/></rule>)",
                                "a");
  CHECK(kind_of([&] { parse_grammar_xml(unit_cycle); }) == ErrorKind::validation);

  // Two maximal horizontal paths, neither nested: no unique baseline.
  auto ambiguous = grammar_xml(R"(<rule id="1" lhs="I"><vertex id="0" label="A"/><vertex id="1" label="A"/>
      <vertex id="2" label="A"/><edge src="0" dst="1" label="h"/><edge src="2" dst="1" label="w"/></rule>
      <rule id="2" lhs="A"><vertex id="0" label="a"/></rule>)",
                               "a");
  CHECK(kind_of([&] { parse_grammar_xml(ambiguous); }) == ErrorKind::embedding);
}

TEST_CASE("minimal grammar and mixed rules") {
  auto g = parse_grammar_xml(grammar_xml(R"(<rule id="a" lhs="I"><vertex id="0" label="a"/></rule>)", "a"));
  auto d = generate(g, 1, 5);
  CHECK(d.graph.serialize() == "vertex 1 a\n");

  // A rhs mixing terminals and nonterminals gets wrapper nonterminals.
  auto mixed = parse_grammar_xml(grammar_xml(R"(
      <rule id="1" lhs="I"><vertex id="0" label="a"/><vertex id="1" label="A"/><edge src="0" dst="1" label="h"/></rule>
      <rule id="2" lhs="A"><vertex id="0" label="b"/></rule>)",
                                             "a b"));
  for (const auto& r : mixed.rules) {
    if (r.kind == RuleKind::terminal) {
      CHECK(r.rhs.vertices.size() == 1);
      CHECK(mixed.is_terminal(r.rhs.vertices[0].label));
    } else {
      for (const auto& v : r.rhs.vertices) CHECK(mixed.is_nonterminal(v.label));
    }
  }
  CHECK(mixed.rules.size() == 3);
}

TEST_CASE("apply_rule under the baseline embedding") {
  const auto& g = math_grammar();
  const auto ctx = embedding_context(g);
  auto out = apply_rule(graph({{0, "ME"}}, {}), 0, g.rule("r-1"), ctx);
  CHECK(out.serialize() == "vertex 1 TRM\nvertex 2 OP\nvertex 3 ME\nedge 1 2 h\nedge 2 3 h\n");

  auto small = parse_grammar_xml(grammar_xml(R"(
      <rule id="1" lhs="I"><vertex id="0" label="X"/><vertex id="1" label="U"/><vertex id="2" label="Y"/>
        <edge src="0" dst="1" label="h"/><edge src="1" dst="2" label="h"/></rule>
      <rule id="2" lhs="U"><vertex id="0" label="D"/></rule>
      <rule id="3" lhs="U"><vertex id="0" label="D"/><vertex id="1" label="E"/><edge src="0" dst="1" label="w"/></rule>
      <rule id="4" lhs="X"><vertex id="0" label="x"/></rule>
      <rule id="5" lhs="Y"><vertex id="0" label="x"/></rule>
      <rule id="6" lhs="D"><vertex id="0" label="x"/></rule>
      <rule id="7" lhs="E"><vertex id="0" label="x"/></rule>)",
                                             "x"));
  const auto sctx = embedding_context(small);
  const auto host = graph({{0, "X"}, {1, "U"}, {2, "Y"}}, {{0, 1, "h"}, {1, 2, "h"}});

  auto one = apply_rule(host, 1, small.rule("2"), sctx);
  CHECK(one.serialize() == "vertex 0 X\nvertex 2 Y\nvertex 3 D\nedge 0 3 h\nedge 3 2 h\n");

  // D alone is the dominant baseline of D -w-> E: both attachments go to D.
  auto two = apply_rule(host, 1, small.rule("3"), sctx);
  CHECK(two.serialize() == "vertex 0 X\nvertex 2 Y\nvertex 3 D\nvertex 4 E\nedge 0 3 h\nedge 3 2 h\nedge 3 4 w\n");
  CHECK(two.is_connected());

  CHECK(kind_of([&] { apply_rule(host, 0, small.rule("2"), sctx); }) == ErrorKind::argument);
  CHECK(kind_of([&] { apply_rule(host, 9, small.rule("2"), sctx); }) == ErrorKind::argument);
}

TEST_CASE("apply_rule under the min-cost embedding") {
  auto g = parse_grammar_xml(grammar_xml(R"(
      <rule id="1" lhs="I"><vertex id="0" label="X"/><vertex id="1" label="U"/><edge src="0" dst="1" label="h"/></rule>
      <rule id="2" lhs="U"><vertex id="0" label="D"/><vertex id="1" label="E"/><edge src="0" dst="1" label="w"/></rule>
      <rule id="3" lhs="X"><vertex id="0" label="x"/></rule>
      <rule id="4" lhs="D"><vertex id="0" label="x"/></rule>
      <rule id="5" lhs="E"><vertex id="0" label="x"/></rule>)",
                                         "x", "h w", R"(initial="I" embedding="min_relation_cost")"));
  EmbeddingContext ctx = embedding_context(g);
  const auto host = graph({{0, "X"}, {1, "U"}}, {{0, 1, "h"}});
  // New vertices are 2 (D) and 3 (E); make E the cheaper target.
  ctx.relation_cost = [](int, int dst) { return dst == 3 ? 0.1 : 0.9; };
  CHECK(apply_rule(host, 1, g.rule("2"), ctx).serialize() ==
        "vertex 0 X\nvertex 2 D\nvertex 3 E\nedge 0 3 h\nedge 2 3 w\n");
  ctx.relation_cost = [](int, int dst) { return dst == 2 ? 0.1 : 0.9; };
  CHECK(apply_rule(host, 1, g.rule("2"), ctx).serialize() ==
        "vertex 0 X\nvertex 2 D\nvertex 3 E\nedge 0 2 h\nedge 2 3 w\n");
  ctx.relation_cost = nullptr;
  CHECK(kind_of([&] { apply_rule(host, 1, g.rule("2"), ctx); }) == ErrorKind::argument);
}

TEST_CASE("derivation of a^b + c^d") {
  const auto& g = math_grammar();
  auto d = derive(g, {"r-1", "r-4", "r-11", "r-6", "r-12", "r-7", "r-2", "r-4", "r-13", "r-6", "r-14"},
                  embedding_context(g));
  // Relabel by symbol to compare with a^b + c^d independently of ids.
  std::map<int, std::string> label;
  for (const auto& v : d.graph.vertices) label[v.id] = v.label;
  std::set<std::string> edges;
  for (const auto& e : d.graph.edges) edges.insert(label[e.src] + " " + e.label + " " + label[e.dst]);
  CHECK(edges == std::set<std::string>{"a sp b", "a h +", "+ h c", "c sp d"});
  CHECK(d.graph.vertices.size() == 5);
  CHECK(d.steps.size() == 11);
  CHECK(d.steps[0].replaced_vertex == 0);
  CHECK(d.steps[0].new_vertices == std::vector<int>{1, 2, 3});
}

TEST_CASE("generate") {
  const auto& g = math_grammar();
  const auto bounds = compute_size_bounds(g);
  for (std::uint64_t seed = 0; seed < 600; ++seed) {
    const int budget = 1 + static_cast<int>(seed % 12);
    auto d = generate(g, budget, seed);
    const auto& gr = d.graph;
    REQUIRE(gr.is_connected());
    CHECK(static_cast<int>(gr.vertices.size()) <= budget);
    CHECK(bounds.at(g.initial).admits(static_cast<int>(gr.vertices.size())));
    for (const auto& v : gr.vertices) CHECK(g.is_terminal(v.label));
    for (const auto& e : gr.edges) CHECK(g.relation_labels.count(e.label) == 1);
  }
  auto one = generate(g, 1, 99);
  CHECK(one.graph.vertices.size() == 1);
  CHECK(generate(g, 8, 4).graph == generate(g, 8, 4).graph);
  CHECK(generate(g, 8, 4).steps.size() == generate(g, 8, 4).steps.size());

  auto pair = parse_grammar_xml(grammar_xml(R"(
      <rule id="1" lhs="I"><vertex id="0" label="A"/><vertex id="1" label="A"/><edge src="0" dst="1" label="h"/></rule>
      <rule id="2" lhs="A"><vertex id="0" label="a"/></rule>)",
                                            "a"));
  CHECK(kind_of([&] { generate(pair, 1, 0); }) == ErrorKind::argument);
}

TEST_CASE("generate flowcharts") {
  const auto& g = support::flowchart_grammar();
  CHECK(g.rules.size() == 16);
  CHECK(g.embedding == EmbeddingKind::min_relation_cost);
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    auto d = generate(g, 12, seed);
    REQUIRE(d.graph.is_connected());
    for (const auto& e : d.graph.edges) {
      // Arrows are the only sources.
      CHECK(d.graph.find(e.src)->label == "arrow");
      CHECK(d.graph.find(e.dst)->label != "arrow");
    }
  }
}

TEST_CASE("serialize is sorted") {
  auto g = graph({{3, "b"}, {1, "a"}}, {{3, 1, "h"}, {1, 3, "w"}});
  CHECK(g.serialize() == "vertex 1 a\nvertex 3 b\nedge 1 3 w\nedge 3 1 h\n");
  g.edges.push_back({1, 1, "h"});
  CHECK(kind_of([&] { g.validate(); }) == ErrorKind::validation);
}
