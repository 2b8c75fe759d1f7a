#include "inkgraph/parser.hpp"

#include "connected_subsets.hpp"
#include "inkgraph/error.hpp"

#include <boost/functional/hash.hpp>

#include <algorithm>
#include <bit>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace inkgraph {

namespace {
constexpr std::string_view kModule = "parser";

std::string set_text(const std::vector<int>& ids) {
  std::string out = "{";
  for (std::size_t i = 0; i < ids.size(); ++i) out += (i ? "," : "") + std::to_string(ids[i]);
  return out + "}";
}
}  // namespace

// ---------------------------------------------------------------------------
// StrokeMask

std::size_t StrokeMask::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool StrokeMask::empty() const {
  return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

bool StrokeMask::intersects(const StrokeMask& other) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i] & other.words_[i]) return true;
  return false;
}

bool StrokeMask::subset_of(const StrokeMask& other) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i] & ~other.words_[i]) return false;
  return true;
}

StrokeMask& StrokeMask::operator|=(const StrokeMask& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

std::vector<std::size_t> StrokeMask::bits() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < words_.size(); ++i)
    for (std::uint64_t w = words_[i]; w; w &= w - 1) out.push_back(i * 64 + static_cast<std::size_t>(std::countr_zero(w)));
  return out;
}

std::size_t StrokeMask::hash() const { return boost::hash_range(words_.begin(), words_.end()); }

// ---------------------------------------------------------------------------
// StrokeGroupIndex

StrokeGroupIndex::StrokeGroupIndex(const HypothesesGraph& h, std::optional<std::size_t> max_vertices,
                                   std::optional<std::size_t> max_strokes, std::size_t budget)
    : h_(&h) {
  h.validate();
  for (std::size_t i = 0; i < h.stroke_universe.size(); ++i) stroke_position_[h.stroke_universe[i]] = i;
  const std::size_t n = h.vertices.size();
  std::vector<StrokeMask> vmask;
  for (const auto& v : h.vertices) {
    vmask.push_back(mask_of(v.stroke_ids));
    max_strokes_per_symbol_ = std::max(max_strokes_per_symbol_, static_cast<int>(v.stroke_ids.size()));
  }
  std::vector<std::vector<int>> adjacency(n);
  for (const auto& e : h.edges) {
    adjacency[e.src].push_back(e.dst);
    adjacency[e.dst].push_back(e.src);
  }
  for (auto& a : adjacency) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  std::vector<StrokeMask> found;
  std::size_t visited = 0;
  detail::enumerate_connected_subsets(
      adjacency, max_vertices.value_or(n),
      [&](const std::vector<int>& subset, int w) {
        for (int s : subset)
          if (vmask[s].intersects(vmask[w])) return false;
        if (max_strokes) {
          std::size_t total = h.vertices[w].stroke_ids.size();
          for (int s : subset) total += h.vertices[s].stroke_ids.size();
          if (total > *max_strokes) return false;
        }
        return true;
      },
      [&](const std::vector<int>& subset) {
        if (++visited > budget)
          throw BudgetError(kModule, "stroke group enumeration exceeded its budget", found.size());
        StrokeMask m(h.stroke_universe.size());
        for (int s : subset) m |= vmask[s];
        found.push_back(std::move(m));
        return true;
      });
  std::sort(found.begin(), found.end(), [](const StrokeMask& a, const StrokeMask& b) {
    const auto ca = a.count(), cb = b.count();
    if (ca != cb) return ca < cb;
    return a.bits() < b.bits();
  });
  found.erase(std::unique(found.begin(), found.end()), found.end());
  containing_.assign(n, {});
  for (const auto& m : found) add_group(m, true);
}

StrokeMask StrokeGroupIndex::mask_of(const std::vector<int>& stroke_ids) const {
  StrokeMask m(h_->stroke_universe.size());
  for (int s : stroke_ids) {
    auto it = stroke_position_.find(s);
    if (it == stroke_position_.end()) throw Error(ErrorKind::argument, kModule, "unknown stroke " + std::to_string(s));
    m.set(it->second);
  }
  return m;
}

int StrokeGroupIndex::add_group(const StrokeMask& mask, bool backed) {
  const int id = static_cast<int>(groups_.size());
  StrokeGroup g;
  g.mask = mask;
  g.backed = backed;
  for (auto b : mask.bits()) g.stroke_ids.push_back(h_->stroke_universe[b]);
  std::vector<char> in(h_->vertices.size(), 0);
  double junk = 0.0;
  for (const auto& v : h_->vertices) {
    const StrokeMask vm = mask_of(v.stroke_ids);
    if (!vm.subset_of(mask)) continue;
    in[v.id] = 1;
    g.inside.push_back(v.id);
    if (vm == mask) g.exact.push_back(v.id);
    for (const auto& ls : v.labels) {
      auto [it, inserted] = g.labels.emplace(ls.label, ls.score);
      if (!inserted) it->second = std::max(it->second, ls.score);
    }
    junk += v.junk_score;
    containing_[v.id].push_back(id);
  }
  g.hyp_count = static_cast<int>(g.inside.size());
  std::size_t count = g.inside.size();
  for (const auto& e : h_->edges)
    if (in[e.src] && in[e.dst]) {
      junk += e.junk_score;
      ++count;
    }
  g.mean_junk = count ? junk / static_cast<double>(count) : 0.0;
  index_.emplace(mask, id);
  groups_.push_back(std::move(g));
  out_ready_.push_back(0);
  out_.emplace_back();
  succ_.emplace_back();
  pred_.emplace_back();
  pred_ready_ = false;
  return id;
}

int StrokeGroupIndex::find(const StrokeMask& mask) const {
  auto it = index_.find(mask);
  return it == index_.end() ? -1 : it->second;
}

int StrokeGroupIndex::whole_input() {
  StrokeMask all(h_->stroke_universe.size());
  for (std::size_t i = 0; i < h_->stroke_universe.size(); ++i) all.set(i);
  const int existing = find(all);
  if (existing >= 0) return existing;
  // Outgoing relation caches of other groups may now miss the new group.
  std::fill(out_ready_.begin(), out_ready_.end(), 0);
  for (auto& o : out_) o.clear();
  for (auto& s : succ_) s.clear();
  return add_group(all, false);
}

void StrokeGroupIndex::outgoing(int a) const {
  if (out_ready_[a]) return;
  auto& out = out_[a];
  const auto& ga = groups_[a];
  for (const auto& e : h_->edges) {
    if (!std::binary_search(ga.inside.begin(), ga.inside.end(), e.src)) continue;
    for (int b : containing_[e.dst]) {
      if (b == a || groups_[b].mask.intersects(ga.mask)) continue;
      auto& rels = out[b];
      for (const auto& ls : e.labels) {
        auto it = std::find_if(rels.begin(), rels.end(), [&](const GroupRelation& r) { return r.label == ls.label; });
        if (it == rels.end()) {
          rels.push_back({ls.label, ls.score, {}});
          it = std::prev(rels.end());
        }
        it->score = std::max(it->score, ls.score);
        it->realizers.push_back({e.src, e.dst, ls.score});
      }
    }
  }
  for (auto& [b, rels] : out) {
    std::sort(rels.begin(), rels.end(), [](const auto& x, const auto& y) { return x.label < y.label; });
    for (auto& r : rels)
      std::sort(r.realizers.begin(), r.realizers.end(), [](const Realizer& x, const Realizer& y) {
        if (x.score != y.score) return x.score > y.score;
        return std::tie(x.src_hyp, x.dst_hyp) < std::tie(y.src_hyp, y.dst_hyp);
      });
    succ_[a].push_back(b);
  }
  out_ready_[a] = 1;
}

const std::vector<GroupRelation>& StrokeGroupIndex::relations(int a, int b) const {
  static const std::vector<GroupRelation> none;
  outgoing(a);
  auto it = out_[a].find(b);
  return it == out_[a].end() ? none : it->second;
}

const GroupRelation* StrokeGroupIndex::relation(int a, int b, const std::string& label) const {
  for (const auto& r : relations(a, b))
    if (r.label == label) return &r;
  return nullptr;
}

const std::vector<int>& StrokeGroupIndex::successors(int a) const {
  outgoing(a);
  return succ_[a];
}

const std::vector<int>& StrokeGroupIndex::predecessors(int b) const {
  if (!pred_ready_) {
    for (auto& p : pred_) p.clear();
    for (std::size_t a = 0; a < groups_.size(); ++a)
      for (int x : successors(static_cast<int>(a))) pred_[x].push_back(static_cast<int>(a));
    pred_ready_ = true;
  }
  return pred_[b];
}

std::string StrokeGroupIndex::dump() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    const auto& g = groups_[i];
    out << "group " << i << ' ' << set_text(g.stroke_ids) << " hyps " << g.hyp_count << " junk " << g.mean_junk;
    if (!g.backed) out << " unbacked";
    for (const auto& [label, score] : g.labels) out << ' ' << label << ':' << score;
    out << '\n';
  }
  for (std::size_t a = 0; a < groups_.size(); ++a)
    for (int b : successors(static_cast<int>(a))) {
      out << "relation " << a << ' ' << b;
      for (const auto& r : relations(static_cast<int>(a), b)) out << ' ' << r.label << ':' << r.score;
      out << '\n';
    }
  return out.str();
}

// ---------------------------------------------------------------------------
// Parser

namespace {

std::optional<std::size_t> initial_cap(const SizeBounds& bounds, const GraphicGrammar& g) {
  const auto& range = bounds.at(g.initial);
  if (!range.max_symbols) return std::nullopt;
  return static_cast<std::size_t>(*range.max_symbols);
}

std::size_t max_group_strokes(const HypothesesGraph& h) {
  std::size_t m = 1;
  for (const auto& v : h.vertices) m = std::max(m, v.stroke_ids.size());
  return m;
}

}  // namespace

Parser::Parser(const GraphicGrammar& g, const HypothesesGraph& h, ParserConfig cfg)
    : g_(&g),
      h_(&h),
      cfg_(cfg),
      bounds_(compute_size_bounds(g)),
      stk_(h, initial_cap(bounds_, g),
           initial_cap(bounds_, g) ? std::optional<std::size_t>(*initial_cap(bounds_, g) * max_group_strokes(h))
                                   : std::nullopt,
           cfg.stk_budget) {
  if (cfg_.t_junk < 0.0 || cfg_.t_junk > 1.0) throw Error(ErrorKind::argument, kModule, "t_junk must lie in [0,1]");
  if (cfg_.junk_min_hyps < 1) throw Error(ErrorKind::argument, kModule, "junk_min_hyps must be positive");
  for (const auto& nt : g.nonterminals) reach_[nt] = reachable_terminals(g, nt);
  stats_.stk_groups = stk_.groups().size();
}

bool Parser::admissible(int group, const std::string& nonterminal, bool count) {
  const auto& grp = stk_.groups()[group];
  const auto strokes = static_cast<int>(grp.stroke_ids.size());
  if (cfg_.prune_size_bounds) {
    const auto& range = bounds_.at(nonterminal);
    const int msps = stk_.max_strokes_per_symbol();
    const int fewest = (strokes + msps - 1) / msps;
    if (range.min_symbols > strokes || (range.max_symbols && *range.max_symbols < fewest)) {
      if (count) ++stats_.pruned_size;
      return false;
    }
  }
  if (cfg_.prune_terminal_reachability) {
    const auto& reach = reach_.at(nonterminal);
    const bool any = std::any_of(grp.labels.begin(), grp.labels.end(),
                                 [&](const auto& kv) { return reach.count(kv.first) != 0; });
    if (!any) {
      if (count) ++stats_.pruned_terminals;
      return false;
    }
  }
  if (cfg_.prune_junk && grp.hyp_count >= cfg_.junk_min_hyps && grp.mean_junk > cfg_.t_junk) {
    if (count) ++stats_.pruned_junk;
    return false;
  }
  return true;
}

std::vector<InstantiatedGraph> Parser::find_valid_matchings(int group, int rule_index) {
  const Production& rule = g_->rules.at(rule_index);
  const auto& rhs = rule.rhs;
  const std::size_t k = rhs.vertices.size();
  const auto& groups = stk_.groups();
  const StrokeMask& target = groups[group].mask;
  std::vector<InstantiatedGraph> result;

  struct RhsEdge {
    int src, dst;
    const std::string* label;
  };
  std::vector<RhsEdge> edges;
  for (const auto& e : rhs.edges) edges.push_back({rhs.position(e.src), rhs.position(e.dst), &e.label});

  auto finish = [&](const std::vector<int>& assigned) {
    InstantiatedGraph m;
    m.rule = rule_index;
    m.groups = assigned;
    for (const auto& e : edges) m.edges.push_back(*stk_.relation(assigned[e.src], assigned[e.dst], *e.label));
    ++stats_.matchings_examined;
    result.push_back(std::move(m));
  };

  if (k == 1) {
    ++stats_.search_steps;
    finish({group});
    return result;
  }

  // Static search order: most constrained vertex first, then by edges into
  // the already ordered prefix.
  std::vector<int> degree(k, 0);
  for (const auto& e : edges) {
    ++degree[e.src];
    ++degree[e.dst];
  }
  std::vector<int> order;
  std::vector<char> placed(k, 0);
  for (std::size_t step = 0; step < k; ++step) {
    int best = -1, best_links = -1;
    for (std::size_t v = 0; v < k; ++v) {
      if (placed[v]) continue;
      int links = 0;
      for (const auto& e : edges)
        if ((e.src == static_cast<int>(v) && placed[e.dst]) || (e.dst == static_cast<int>(v) && placed[e.src])) ++links;
      if (step > 0 && links == 0) continue;
      if (links > best_links || (links == best_links && degree[v] > degree[best])) {
        best = static_cast<int>(v);
        best_links = links;
      }
    }
    order.push_back(best);
    placed[best] = 1;
  }

  // Per-position filter shared by all branches.
  std::vector<std::map<int, bool>> allowed(k);
  auto vertex_ok = [&](int pos, int cand) {
    auto [it, inserted] = allowed[pos].emplace(cand, true);
    if (inserted) it->second = admissible(cand, rhs.vertices[pos].label, true);
    return it->second;
  };

  std::vector<int> anchors;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (static_cast<int>(i) != group && groups[i].backed && groups[i].mask.subset_of(target))
      anchors.push_back(static_cast<int>(i));

  std::vector<int> assigned(k, -1);
  StrokeMask used(stk_.universe_size());
  const std::size_t total = target.count();

  auto step = [&](auto& self, std::size_t depth, std::size_t covered) -> void {
    if (depth == k) {
      if (covered == total) finish(assigned);
      return;
    }
    const int pos = order[depth];
    // Candidate list from the first constraint to an assigned vertex.
    const std::vector<int>* candidates = &anchors;
    for (const auto& e : edges) {
      if (e.dst == pos && assigned[e.src] >= 0) {
        candidates = &stk_.successors(assigned[e.src]);
        break;
      }
      if (e.src == pos && assigned[e.dst] >= 0) {
        candidates = &stk_.predecessors(assigned[e.dst]);
        break;
      }
    }
    const std::size_t remaining = k - depth - 1;
    for (int cand : *candidates) {
      ++stats_.search_steps;
      if (cfg_.matching_budget && stats_.search_steps > *cfg_.matching_budget)
        throw BudgetError(kModule, "matching search exceeded its budget", stats_.matchings_examined);
      const auto& cg = groups[cand];
      if (!cg.backed || !cg.mask.subset_of(target) || cg.mask.intersects(used)) continue;
      const std::size_t now = covered + cg.stroke_ids.size();
      if (total - now < remaining || (remaining == 0 && now != total)) continue;
      bool ok = true;
      for (const auto& e : edges) {
        if (e.dst == pos && assigned[e.src] >= 0 && !stk_.relation(assigned[e.src], cand, *e.label)) ok = false;
        if (e.src == pos && assigned[e.dst] >= 0 && !stk_.relation(cand, assigned[e.dst], *e.label)) ok = false;
        if (!ok) break;
      }
      if (ok && cfg_.strict_induced) {
        for (std::size_t other = 0; other < k && ok; ++other) {
          if (assigned[other] < 0) continue;
          auto has_edge = [&](int s, int d) {
            return std::any_of(edges.begin(), edges.end(), [&](const RhsEdge& e) { return e.src == s && e.dst == d; });
          };
          if (!has_edge(static_cast<int>(other), pos) && !stk_.relations(assigned[other], cand).empty()) ok = false;
          if (!has_edge(pos, static_cast<int>(other)) && !stk_.relations(cand, assigned[other]).empty()) ok = false;
        }
      }
      if (!ok || !vertex_ok(pos, cand)) continue;
      assigned[pos] = cand;
      StrokeMask saved = used;
      used |= cg.mask;
      self(self, depth + 1, now);
      used = std::move(saved);
      assigned[pos] = -1;
    }
  };
  step(step, 0, 0);

  std::sort(result.begin(), result.end(), [&](const InstantiatedGraph& a, const InstantiatedGraph& b) {
    for (std::size_t i = 0; i < k; ++i)
      if (a.groups[i] != b.groups[i]) return groups[a.groups[i]].stroke_ids < groups[b.groups[i]].stroke_ids;
    return false;
  });
  return result;
}

const std::vector<ParsedGraph>& Parser::parse(int group, const std::string& nonterminal) {
  if (!g_->is_nonterminal(nonterminal)) throw Error(ErrorKind::argument, kModule, "unknown nonterminal " + nonterminal);
  const auto key = std::make_pair(group, nonterminal);
  if (auto it = tbl_.find(key); it != tbl_.end()) {
    if (!it->second.done)
      throw Error(ErrorKind::state, kModule,
                  "cyclic derivation on " + set_text(stk_.groups()[group].stroke_ids) + " " + nonterminal);
    ++stats_.memo_hits;
    return it->second.parses;
  }
  ++stats_.memo_misses;
  Entry& entry = tbl_[key];
  if (!admissible(group, nonterminal, true)) {
    entry.done = true;
    return entry.parses;
  }
  const int times = ++computations_[key];
  ++stats_.keys_computed;
  stats_.max_computations_per_key = std::max<std::size_t>(stats_.max_computations_per_key, times);

  const auto& grp = stk_.groups()[group];
  const int strokes = static_cast<int>(grp.stroke_ids.size());
  std::vector<ParsedGraph> found;
  for (int ri : g_->rules_for(nonterminal)) {
    const Production& rule = g_->rules[ri];
    if (rule.kind == RuleKind::terminal) {
      const std::string& label = rule.rhs.vertices.front().label;
      for (int hyp : grp.exact)
        for (const auto& ls : h_->vertices[hyp].labels)
          if (ls.label == label) {
            ParsedGraph p;
            p.graph.rule = ri;
            p.graph.groups = {group};
            p.hyp = hyp;
            p.terminal = label;
            p.score = ls.score;
            found.push_back(std::move(p));
          }
      continue;
    }
    if (cfg_.prune_size_bounds && rule.rhs.vertices.size() > 1) {
      int lo = 0;
      std::optional<int> hi = 0;
      for (const auto& v : rule.rhs.vertices) {
        const auto& r = bounds_.at(v.label);
        lo += r.min_symbols;
        if (hi && r.max_symbols)
          *hi += *r.max_symbols;
        else
          hi.reset();
      }
      if (lo > strokes || (hi && *hi * stk_.max_strokes_per_symbol() < strokes)) {
        ++stats_.pruned_size;
        continue;
      }
    }
    for (auto& m : find_valid_matchings(group, ri)) {
      bool ok = true;
      StrokeMask cover(stk_.universe_size());
      for (std::size_t i = 0; i < m.groups.size() && ok; ++i) {
        const auto& child = stk_.groups()[m.groups[i]].mask;
        if (cover.intersects(child))
          throw Error(ErrorKind::state, kModule, "matching parts overlap in rule " + rule.id);
        cover |= child;
        ok = !parse(m.groups[i], rule.rhs.vertices[i].label).empty();
      }
      if (!ok) continue;
      if (!(cover == grp.mask)) throw Error(ErrorKind::state, kModule, "matching does not cover its group in rule " + rule.id);
      ParsedGraph p;
      p.graph = std::move(m);
      found.push_back(std::move(p));
    }
  }
  Entry& done = tbl_[key];
  done.parses = std::move(found);
  done.done = true;
  return done.parses;
}

bool Parser::memoized(int group, const std::string& nonterminal) const {
  auto it = tbl_.find({group, nonterminal});
  return it != tbl_.end() && it->second.done;
}

ParseForest Parser::forest(int group, const std::string& nonterminal) const {
  ParseForest f;
  f.stats = stats_;
  std::map<std::pair<int, std::string>, int> index;
  auto visit = [&](auto& self, int grp, const std::string& nt) -> int {
    const auto key = std::make_pair(grp, nt);
    if (auto it = index.find(key); it != index.end()) return it->second;
    auto entry = tbl_.find(key);
    if (entry == tbl_.end() || entry->second.parses.empty()) return -1;
    ForestNode node;
    node.stroke_ids = stk_.groups()[grp].stroke_ids;
    node.nonterminal = nt;
    for (const auto& p : entry->second.parses) {
      const Production& rule = g_->rules[p.graph.rule];
      ForestDerivation d;
      d.rule_id = rule.id;
      if (rule.kind == RuleKind::terminal) {
        d.terminal = ForestTerminal{p.terminal, p.score, p.hyp};
      } else {
        for (std::size_t i = 0; i < p.graph.groups.size(); ++i) {
          const int child = self(self, p.graph.groups[i], rule.rhs.vertices[i].label);
          if (child < 0) throw Error(ErrorKind::state, kModule, "forest child missing from the memo table");
          d.children.push_back(child);
        }
        for (std::size_t i = 0; i < rule.rhs.edges.size(); ++i) {
          const auto& e = rule.rhs.edges[i];
          const auto& r = p.graph.edges[i];
          d.edges.push_back({rule.rhs.position(e.src), rule.rhs.position(e.dst), r.label, r.score, r.realizers});
        }
      }
      node.derivations.push_back(std::move(d));
    }
    const int id = static_cast<int>(f.nodes.size());
    f.nodes.push_back(std::move(node));
    index.emplace(key, id);
    return id;
  };
  f.root = visit(visit, group, nonterminal);
  return f;
}

ParseForest Parser::run() {
  if (h_->stroke_universe.empty()) throw Error(ErrorKind::argument, kModule, "cannot parse an empty stroke set");
  const int all = stk_.whole_input();
  stats_.stk_groups = stk_.groups().size();
  parse(all, g_->initial);
  return forest(all, g_->initial);
}

ParseForest parse_input(const GraphicGrammar& g, const HypothesesGraph& h, const ParserConfig& cfg) {
  Parser p(g, h, cfg);
  return p.run();
}

std::string ParseForest::dump() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  if (root < 0) return "empty\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    out << "node " << i << ' ' << set_text(n.stroke_ids) << ' ' << n.nonterminal << (static_cast<int>(i) == root ? " root" : "")
        << '\n';
    for (const auto& d : n.derivations) {
      out << "  " << d.rule_id;
      if (d.terminal) {
        out << " terminal " << d.terminal->label << ' ' << d.terminal->score << " hyp " << d.terminal->hyp;
      } else {
        out << " children";
        for (int c : d.children) out << ' ' << c;
        for (const auto& e : d.edges) out << " | " << e.src << ' ' << e.label << ' ' << e.dst << ' ' << e.score;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace inkgraph
