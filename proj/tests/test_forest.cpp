#include "doctest.h"

#include "support.hpp"

#include <cmath>
#include <random>
#include <set>
#include <tuple>

using namespace inkgraph;
using support::E;
using support::V;

namespace {

std::vector<LabelScore> one(const std::string& label, double score = 0.9) { return {{label, score}}; }

CostRow row(double J, std::string canon) {
  CostRow r;
  r.J = J;
  r.canon = std::move(canon);
  return r;
}

std::vector<std::string> canons_of(const std::vector<CostRow>& rows) {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(r.canon);
  return out;
}

const CostedTree* find_tree(const std::vector<CostedTree>& trees, const std::string& canon) {
  for (const auto& t : trees)
    if (t.canon == canon) return &t;
  return nullptr;
}

// Recount over leaves and edges, summed subtree by subtree.
struct Recount {
  double J_s = 0, J_r = 0;
  int n_s = 0, n_r = 0;
};
Recount recount(const TreeNode& t) {
  Recount r;
  if (t.terminal) {
    r.J_s = support::nlog(t.terminal->score);
    r.n_s = 1;
    return r;
  }
  for (const auto& e : t.edges) {
    r.J_r += support::nlog(e.score);
    r.n_r += 1;
  }
  for (const auto& c : t.children) {
    const auto sub = recount(c);
    r.J_s += sub.J_s;
    r.J_r += sub.J_r;
    r.n_s += sub.n_s;
    r.n_r += sub.n_r;
  }
  return r;
}

// Random forests with between 2 and 100 trees.
std::vector<ParseForest> random_forests(std::uint64_t seed, int want) {
  std::mt19937_64 rng(seed);
  std::vector<ParseForest> out;
  while (static_cast<int>(out.size()) < want) {
    auto g = support::random_grammar(rng);
    auto h = support::random_h(rng, 6, {"x", "y", "z"}, {"r", "s"}, 0.6);
    auto f = parse_input(g, h);
    const auto n = support::tree_count(f);
    if (n >= 2 && n <= 100) out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

TEST_CASE("tree cost examples") {
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0), e3 = std::exp(-3.0);
  CHECK(tree_cost(-std::log(e2), 0, 1, 0, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tree_cost(-std::log(e1) - std::log(e3), 0, 2, 0, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tree_cost(0, -std::log(e2), 2, 1, 0.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tree_cost(2.0, 1.0, 2, 1, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  // No relations: the relation term vanishes instead of dividing by zero.
  CHECK(tree_cost(3.0, 0.0, 1, 0, 0.4) == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("four symbols and three relations") {
  auto& g = support::math_grammar();
  const auto s = support::fig6_lt_scores();
  auto f = parse_input(g, support::fig6_h(s));
  const double sym[] = {s.P, s.b, s.lt, s.one}, rel[] = {s.sp, s.P_to_lt, s.lt_to_1};
  double js = 0, jr = 0;
  for (double x : sym) js -= std::log(x);
  for (double r : rel) jr -= std::log(r);
  for (double alpha : {0.0, 0.4, 0.5, 1.0}) {
    CostParams p;
    p.alpha = alpha;
    p.t_pr = 1.0;
    auto trees = extract_trees(f, p, 1000);
    const auto* t = find_tree(trees, support::fig6_pb_lt_1);
    REQUIRE(t);
    CHECK(t->n_s == 4);
    CHECK(t->n_r == 3);
    CHECK(std::abs(t->J - (alpha / 4 * js + (1 - alpha) / 3 * jr)) <= 1e-9);
  }
}

TEST_CASE("relative pruning") {
  // t_pr = 0 keeps the minimum and its ties only.
  auto zero = prune_rows({row(1.3, "c"), row(1.0, "b"), row(1.0, "a"), row(1.0 + 1e-6, "d")}, 0.0);
  CHECK(canons_of(zero) == std::vector<std::string>{"a", "b"});

  auto tenth = prune_rows({row(1.3, "c"), row(1.0, "a"), row(1.05, "b"), row(1.1, "e")}, 0.1);
  CHECK(canons_of(tenth) == std::vector<std::string>{"a", "b"});

  auto all = prune_rows({row(1.3, "c"), row(1.0, "a")}, 1.0);
  CHECK(canons_of(all) == std::vector<std::string>{"a", "c"});
  CHECK(prune_rows({}, 0.5).empty());

  // P at .9 against p at .6 on a single vertex.
  auto h = support::make_h({{{0}, {{"P", .9}, {"p", .6}}}}, {});
  auto f = parse_input(support::math_grammar(), h);
  CostParams p;
  auto trees = extract_trees(f, p, 10);
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].canon.find("[P{0}]") != std::string::npos);
  p.alpha = 1.0;
  p.t_pr = 1.0;
  auto tables = build_nbest_tables(f, p);
  // J(p) / J(P) = log .6 / log .9 > 2, outside even t_pr = 1.
  CHECK(tables[f.root].size() == 1);

  p.t_pr = 1.5;
  CHECK_THROWS_AS(build_nbest_tables(f, p), Error);
  p.t_pr = 0.1;
  p.alpha = -0.1;
  CHECK_THROWS_AS(build_nbest_tables(f, p), Error);
}

TEST_CASE("fig6 best tree") {
  auto& g = support::math_grammar();
  auto f = parse_input(g, support::fig6_h());
  auto trees = extract_trees(f, CostParams{}, 5);
  REQUIRE_FALSE(trees.empty());
  CHECK(trees[0].canon == support::fig6_pb4);
  auto out = render(trees[0], g, support::fig6_h(), true);
  REQUIRE(out.text);
  CHECK(*out.text == "P^b4");

  // Favoring "<" and "1" over "4" flips the ranking.
  auto flipped = extract_trees(parse_input(g, support::fig6_h(support::fig6_lt_scores())), CostParams{}, 5);
  REQUIRE_FALSE(flipped.empty());
  CHECK(flipped[0].canon == support::fig6_pb_lt_1);
}

TEST_CASE("rendering resolves relations to symbol edges") {
  auto& g = support::math_grammar();
  auto h = support::fig6_h(support::fig6_lt_scores());
  auto f = parse_input(g, h);
  CostParams p;
  p.t_pr = 1.0;
  auto trees = extract_trees(f, p, 1000);
  const auto* t = find_tree(trees, support::fig6_pb_lt_1);
  REQUIRE(t);
  auto out = render(*t, g, h, true);
  CHECK(*out.text == "P^b < 1");
  std::set<std::tuple<std::vector<int>, std::vector<int>, std::string>> rels;
  for (const auto& r : out.relations) rels.insert({r.src, r.dst, r.label});
  CHECK(rels == decltype(rels){{{0}, {1}, "sp"}, {{0}, {2}, "h"}, {{2}, {3}, "h"}});
  CHECK(out.symbols.size() == 4);
  CHECK(out.graph.edges.size() == 3);

  auto h2 = support::make_h({{{0}, one("a")}, {{1}, one("b")}, {{2}, one("+")}, {{3}, one("c")}, {{4}, one("d")}},
                            {{0, 1, one("sp")}, {0, 2, one("h")}, {2, 3, one("h")}, {3, 4, one("sp")}});
  auto trees2 = extract_trees(parse_input(g, h2), CostParams{}, 1);
  REQUIRE(trees2.size() == 1);
  auto out2 = render(trees2[0], g, h2, true);
  CHECK(*out2.text == "a^b + c^d");
  CHECK(out2.relations.size() == 4);
}

TEST_CASE("rendering without templates") {
  GraphicGrammar g;
  g.nonterminals = {"I", "X"};
  g.terminals = {"a"};
  g.relation_labels = {"h"};
  g.initial = "I";
  g.embedding = EmbeddingKind::min_relation_cost;
  Production top, leaf;
  top.id = "top";
  top.lhs = "I";
  top.rhs.vertices = {{0, "X"}, {1, "X"}};
  top.rhs.edges = {{0, 1, "h"}};
  leaf.id = "leaf";
  leaf.lhs = "X";
  leaf.rhs.vertices = {{0, "a"}};
  g.rules = {top, leaf};
  g.finalize();
  auto h = support::make_h({{{0}, one("a")}, {{1}, one("a")}}, {{0, 1, one("h")}});
  auto trees = extract_trees(parse_input(g, h), CostParams{}, 1);
  REQUIRE(trees.size() == 1);
  auto plain = render(trees[0], g, h, false);
  CHECK_FALSE(plain.text);
  CHECK(plain.relations.size() == 1);
  try {
    render(trees[0], g, h, true);
    FAIL("expected a rendering error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::rendering);
  }
}

TEST_CASE("extraction matches per-node exhaustive scoring") {
  auto forests = random_forests(91, 60);
  for (const auto& f : forests)
    for (double alpha : {0.0, 0.4, 1.0})
      for (double t_pr : {0.0, 0.1, 0.5, 1.0}) {
        CostParams p;
        p.alpha = alpha;
        p.t_pr = t_pr;
        auto got = extract_trees(f, p, 1000);
        auto oracle = support::spanned_trees(f, alpha, [&](auto trees) { return support::relative_prune(trees, t_pr); });
        auto want = oracle[f.root];
        std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
          return a.J != b.J ? a.J < b.J : a.canon < b.canon;
        });
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          CHECK(got[i].canon == want[i].canon);
          CHECK(std::abs(got[i].J - want[i].J) <= 1e-9);
        }
      }
}

TEST_CASE("stored costs match a recount") {
  for (const auto& f : random_forests(5, 40)) {
    CostParams p;
    p.t_pr = 1.0;
    for (const auto& t : extract_trees(f, p, 1000)) {
      const auto r = recount(t.root);
      CHECK(t.n_s == r.n_s);
      CHECK(t.n_r == r.n_r);
      CHECK(t.J_s == r.J_s);
      CHECK(t.J_r == r.J_r);
      CHECK(t.n_s == symbol_count(t.root));
      CHECK(t.n_r == relation_count(t.root));
      CHECK(std::abs(t.J - support::cost_of(r.J_s, r.J_r, r.n_s, r.n_r, p.alpha)) <= 1e-9);
    }
  }
}

TEST_CASE("alpha extremes ignore the other score family") {
  auto& g = support::math_grammar();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    support::Fig6Scores base;
    base.P = u(rng);
    base.p = u(rng);
    base.four = u(rng);
    base.y = u(rng);
    base.lt = u(rng);
    base.one = u(rng);
    auto perturbed_rel = base;
    perturbed_rel.sp = u(rng);
    perturbed_rel.h = u(rng);
    perturbed_rel.b_to_4 = u(rng);
    perturbed_rel.P_to_lt = u(rng);
    perturbed_rel.lt_to_1 = u(rng);
    auto perturbed_sym = base;
    perturbed_sym.P = u(rng);
    perturbed_sym.p = u(rng);
    perturbed_sym.four = u(rng);
    perturbed_sym.y = u(rng);
    perturbed_sym.b = u(rng);
    perturbed_sym.lt = u(rng);
    perturbed_sym.one = u(rng);

    auto best = [&](const support::Fig6Scores& s, double alpha) {
      CostParams p;
      p.alpha = alpha;
      auto trees = extract_trees(parse_input(g, support::fig6_h(s)), p, 1);
      return trees.empty() ? std::string() : trees[0].canon;
    };
    CHECK(best(base, 1.0) == best(perturbed_rel, 1.0));
    CHECK(best(base, 0.0) == best(perturbed_sym, 0.0));
  }
}

TEST_CASE("zero threshold keeps exactly the minimum-cost trees") {
  for (const auto& f : random_forests(17, 60)) {
    CostParams p;
    p.t_pr = 0.0;
    auto tables = build_nbest_tables(f, p);
    auto every = support::spanned_trees(f, p.alpha, [](auto trees) { return support::relative_prune(trees, 0.0); });
    for (std::size_t x = 0; x < f.nodes.size(); ++x) {
      REQUIRE(tables[x].size() == every[x].size());
      for (const auto& r : tables[x]) CHECK(std::abs(r.J - tables[x][0].J) <= 1e-12 * std::max(1.0, tables[x][0].J));
    }
  }
}
