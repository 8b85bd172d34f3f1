#include "matching.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <unordered_set>

namespace kvm {

const char* matching_kind_name(MatchingKind k) { return k == MatchingKind::Lex ? "lex" : "greedy"; }

const char* violation_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::None: return "ok";
    case ViolationKind::NotIso: return "not-iso";
    case ViolationKind::Adjacent: return "adjacent";
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::Budget: return "budget";
  }
  return "?";
}

namespace {

bool serialized_less(const Word& a, const Word& b) { return word_to_string(a) < word_to_string(b); }

}  // namespace

Matching Matching::build(const MorsePresentation& p, MatchingKind kind, int max_level) {
  Matching m;
  m.p_ = p;
  m.kind_ = kind;
  const int n = p.num_layers();
  m.max_level_ = max_level < 0 ? n : std::min(max_level, n);
  m.levels_.resize(n);

  struct Cand {
    Word src, tgt;
  };
  std::vector<Word> cur{Word{}};
  for (int k = 1; k <= n; ++k) {
    cur = expand(p, cur);
    m.expanded_sizes_.push_back(cur.size());
    if (k > m.max_level_) continue;
    std::unordered_set<Word> live(cur.begin(), cur.end());
    std::vector<std::vector<Cand>> by_j(k + 1);
    for (const Word& a : cur) {
      // an edge with u = k involves a loop whose highest layer is k
      if (token_color(static_cast<uint8_t>(a[k - 1])) == Color::None) continue;
      std::vector<Neighbor> nbs;
      if (kind == MatchingKind::Lex) {
        nbs = neighbors_at(p, a, scan(p, a), k);
      } else {
        nbs = neighbors(p, a);
      }
      for (auto& nb : nbs) {
        if (nb.cls.kind != EdgeKind::Iso || nb.cls.u != k) continue;
        if (!live.count(nb.cell)) continue;
        if (nb.out) by_j[nb.cls.i].push_back({a, nb.cell});
        else by_j[nb.cls.i].push_back({nb.cell, a});
      }
    }
    auto& level = m.levels_[k - 1];
    const int j_low = kind == MatchingKind::Lex ? k : 1;
    for (int j = k; j >= j_low; --j) {
      std::unordered_map<Word, Word> claimed;
      for (const Cand& c : by_j[j]) {
        if (!live.count(c.src) || !live.count(c.tgt)) continue;
        auto s = claimed.find(c.src);
        auto t = claimed.find(c.tgt);
        if (s != claimed.end() || t != claimed.end()) {
          if (s != claimed.end() && s->second == c.tgt) continue;
          throw Error(ErrorCode::Internal, "overlapping pairs at level " + std::to_string(k) + " round " +
                                               std::to_string(j) + " around " + word_to_string(c.src));
        }
        claimed.emplace(c.src, c.tgt);
        claimed.emplace(c.tgt, c.src);
        level.emplace(c.src, Entry{c.tgt, true, j});
        level.emplace(c.tgt, Entry{c.src, false, j});
      }
      for (const auto& [w, _] : claimed) live.erase(w);
    }
    if (!level.empty()) {
      std::vector<Word> next;
      next.reserve(live.size());
      for (Word& w : cur)
        if (live.count(w)) next.push_back(std::move(w));
      cur = std::move(next);
    }
  }
  std::sort(cur.begin(), cur.end(), serialized_less);
  m.unmatched_ = std::move(cur);
  return m;
}

std::optional<MatchInfo> Matching::lookup(const Word& w) const {
  const int m = std::min(static_cast<int>(w.size()), max_level_);
  Word prefix;
  prefix.reserve(w.size());
  for (int k = 1; k <= m; ++k) {
    prefix.push_back(w[k - 1]);
    const auto& level = levels_[k - 1];
    if (level.empty()) continue;
    auto it = level.find(prefix);
    if (it != level.end()) return MatchInfo{it->second.partner + w.substr(k), it->second.source, k, it->second.j};
  }
  return std::nullopt;
}

std::optional<MatchInfo> Matching::lookup_at(const Word& w, int level) const {
  if (level < 1 || level > max_level_ || static_cast<int>(w.size()) != level) return std::nullopt;
  const auto& lv = levels_[level - 1];
  auto it = lv.find(w);
  if (it == lv.end()) return std::nullopt;
  return MatchInfo{it->second.partner, it->second.source, level, it->second.j};
}

std::vector<Matching::Pair> Matching::pairs_at(int level) const {
  std::vector<Pair> out;
  for (const auto& [w, e] : levels_[level - 1])
    if (e.source) out.push_back({w, e.partner, e.j});
  std::sort(out.begin(), out.end(), [](const Pair& a, const Pair& b) { return serialized_less(a.source, b.source); });
  return out;
}

size_t Matching::num_pairs() const {
  size_t n = 0;
  for (const auto& l : levels_) n += l.size() / 2;
  return n;
}

std::vector<Word> unmatched_lex(const MorsePresentation& p) { return Matching::build(p, MatchingKind::Lex).unmatched(); }

std::vector<Word> unmatched_greedy(const MorsePresentation& p) {
  return Matching::build(p, MatchingKind::Greedy).unmatched();
}

std::optional<VertexMatch> match_vertex_lex(const MorsePresentation& p, const Word& a) {
  for (int k = 1; k <= static_cast<int>(a.size()); ++k) {
    if (auto b = isopair(p, a, k, k)) return VertexMatch{*b, token_base(static_cast<uint8_t>(a[k - 1])) == 0};
  }
  return std::nullopt;
}

namespace {

struct IsoStep {
  int k, j;
  Word cell;
  bool source;  // the queried cell is the source
};

class GreedyOracle {
 public:
  GreedyOracle(const MorsePresentation& p, int cap) : p_(p), cap_(cap) {}

  // iso neighbours in greedy order: k ascending, then j descending
  const std::vector<IsoStep>& steps(const Word& x) {
    auto it = steps_.find(x);
    if (it != steps_.end()) return it->second;
    std::vector<IsoStep> s;
    for (auto& nb : neighbors(p_, x))
      if (nb.cls.kind == EdgeKind::Iso) s.push_back({nb.cls.u, nb.cls.i, std::move(nb.cell), nb.out});
    std::sort(s.begin(), s.end(), [](const IsoStep& a, const IsoStep& b) {
      return a.k != b.k ? a.k < b.k : a.j > b.j;
    });
    for (size_t t = 1; t < s.size(); ++t)
      if (s[t].k == s[t - 1].k && s[t].j == s[t - 1].j)
        throw Error(ErrorCode::NonUniqueIsoPair, "two iso neighbours of " + word_to_string(x) + " share (i,u)");
    return steps_.emplace(x, std::move(s)).first->second;
  }

  bool matches_back(const Word& x, const Word& y, int depth) {
    if (depth > cap_) throw Error(ErrorCode::RecursionDepthExceeded, "MatchesBack recursion exceeded the cap");
    const std::string key = x + '\x7f' + y;
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    bool result = false;
    for (const IsoStep& st : steps(x)) {
      if (st.cell == y) {
        result = true;
        break;
      }
      if (matches_back(st.cell, x, depth + 1)) break;
    }
    memo_.emplace(key, result);
    return result;
  }

 private:
  const MorsePresentation& p_;
  int cap_;
  std::unordered_map<Word, std::vector<IsoStep>> steps_;
  std::unordered_map<std::string, bool> memo_;
};

}  // namespace

std::optional<VertexMatch> match_vertex_greedy(const MorsePresentation& p, const Word& a, int recursion_cap) {
  GreedyOracle oracle(p, recursion_cap);
  const auto steps = oracle.steps(a);
  for (const IsoStep& st : steps)
    if (oracle.matches_back(st.cell, a, 1)) return VertexMatch{st.cell, st.source};
  return std::nullopt;
}

namespace {

// Every cell of p, or nullopt if there are more than `budget` of them.
std::optional<std::vector<Word>> bounded_cells(const MorsePresentation& p, size_t budget) {
  std::vector<Word> cur{Word{}};
  for (int l = 1; l <= p.num_layers(); ++l) {
    cur = expand(p, cur);
    if (cur.size() > budget) return std::nullopt;
  }
  return cur;
}

// Three-colour DFS over an implicit graph. Returns a cycle (as a vertex list) if one is reachable.
template <class Succ>
std::optional<std::vector<Word>> find_reachable_cycle(const std::vector<Word>& starts, Succ succ, size_t budget,
                                                      size_t& explored, bool& over_budget) {
  std::unordered_map<Word, uint8_t> color;  // 1 = on stack, 2 = done
  struct Frame {
    Word node;
    std::vector<Word> next;
    size_t pos = 0;
  };
  for (const Word& s : starts) {
    if (color.count(s)) continue;
    std::vector<Frame> stack;
    color[s] = 1;
    stack.push_back({s, succ(s)});
    ++explored;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.pos == f.next.size()) {
        color[f.node] = 2;
        stack.pop_back();
        continue;
      }
      Word nxt = f.next[f.pos++];
      auto it = color.find(nxt);
      if (it == color.end()) {
        if (++explored > budget) {
          over_budget = true;
          return std::nullopt;
        }
        color[nxt] = 1;
        auto succs = succ(nxt);
        stack.push_back({std::move(nxt), std::move(succs)});
      } else if (it->second == 1) {
        std::vector<Word> cyc;
        size_t t = 0;
        while (stack[t].node != nxt) ++t;
        for (; t < stack.size(); ++t) cyc.push_back(stack[t].node);
        return cyc;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

VerifyReport verify_matching_exhaustive(const Matching& m, size_t budget) {
  VerifyReport rep;
  rep.method = "exhaustive";
  const MorsePresentation& p = m.presentation();
  auto cells = bounded_cells(p, budget);
  if (!cells) {
    rep.kind = ViolationKind::Budget;
    return rep;
  }
  std::unordered_map<Word, MatchInfo> info;
  for (const Word& c : *cells)
    if (auto mi = m.lookup(c)) info.emplace(c, *mi);
  for (const auto& [c, mi] : info) {
    auto back = info.find(mi.partner);
    if (back == info.end() || back->second.partner != c || back->second.source == mi.source) {
      rep.kind = ViolationKind::Adjacent;
      rep.witness = {c, mi.partner};
      return rep;
    }
    if (mi.source) {
      EdgeClass ec = classify_edge(p, c, mi.partner);
      if (ec.kind != EdgeKind::Iso) {
        rep.kind = ViolationKind::NotIso;
        rep.witness = {c, mi.partner};
        return rep;
      }
    }
  }
  auto succ = [&](const Word& x) {
    std::vector<Word> out;
    auto it = info.find(x);
    if (it != info.end() && !it->second.source) {
      out.push_back(it->second.partner);
    }
    for (auto& nb : out_neighbors(p, x)) {
      if (it != info.end() && it->second.source && nb.cell == it->second.partner) continue;
      out.push_back(std::move(nb.cell));
    }
    return out;
  };
  bool over = false;
  auto cyc = find_reachable_cycle(*cells, succ, budget * 4, rep.explored, over);
  if (over) rep.kind = ViolationKind::Budget;
  if (cyc) {
    rep.kind = ViolationKind::Cycle;
    rep.witness = *cyc;
  }
  return rep;
}

VerifyReport verify_matching_layered(const Matching& m, size_t budget) {
  VerifyReport rep;
  rep.method = "layered";
  const MorsePresentation& p = m.presentation();
  for (int L = 1; L <= m.max_level(); ++L) {
    std::vector<Word> starts;
    for (const auto& pr : m.pairs_at(L)) {
      EdgeClass ec = classify_edge(p, pr.source, pr.target);
      if (ec.kind != EdgeKind::Iso || ec.u != L || ec.i != pr.j) {
        rep.kind = ViolationKind::NotIso;
        rep.witness = {pr.source, pr.target};
        return rep;
      }
      starts.push_back(pr.source);
    }
    if (starts.empty()) continue;
    auto succ = [&](const Word& x) {
      std::vector<Word> out;
      auto mx = m.lookup(x);
      if (!mx || !mx->source) return out;
      for (auto& nb : out_neighbors(p, x)) {
        if (nb.cls.i > mx->level || nb.cell == mx->partner) continue;
        auto my = m.lookup(nb.cell);
        if (!my || my->source || nb.cls.i > my->level) continue;
        out.push_back(std::move(my->partner));
      }
      return out;
    };
    bool over = false;
    auto cyc = find_reachable_cycle(starts, succ, budget, rep.explored, over);
    if (cyc) {
      rep.kind = ViolationKind::Cycle;
      rep.witness = *cyc;
      return rep;
    }
    if (over) {
      rep.kind = ViolationKind::Budget;
      return rep;
    }
  }
  return rep;
}

VerifyReport verify_matching_local(const Matching& m) {
  VerifyReport rep;
  rep.method = "local";
  const MorsePresentation& p = m.presentation();
  for (int k = 1; k <= m.max_level(); ++k) {
    for (const auto& pr : m.pairs_at(k)) {
      const Word& c = pr.source;
      const Word& b = pr.target;
      const int I = pr.j;
      EdgeClass ec = classify_edge(p, c, b);
      if (ec.kind != EdgeKind::Iso || ec.u != k || ec.i != I) {
        rep.kind = ViolationKind::NotIso;
        rep.witness = {c, b};
        return rep;
      }
      ++rep.explored;
      // a -> b forward with a the source of its own pair. On a cycle i(a -> b) is
      // at most k, so a is seen through its k-prefix; an a that is still
      // unmatched there could be matched higher up and has to count.
      std::optional<Word> a_hit;
      for (const auto& nb : neighbors(p, b)) {
        if (nb.out || nb.cls.i < I || nb.cell == c) continue;
        auto ma = m.lookup(nb.cell);
        if (ma && (!ma->source || ma->j < I || nb.cls.i > ma->level)) continue;
        a_hit = nb.cell;
        break;
      }
      if (!a_hit) continue;
      for (const auto& nb : out_neighbors(p, c)) {
        if (nb.cls.i < I || nb.cell == b) continue;
        auto md = m.lookup(nb.cell);
        if (md && (md->source || md->j < I || nb.cls.i > md->level)) continue;
        rep.kind = ViolationKind::Budget;
        rep.witness = {*a_hit, b, c, nb.cell};
        return rep;
      }
    }
  }
  return rep;
}

VerifyReport verify_matching(const Matching& m) {
  VerifyReport local = verify_matching_local(m);
  if (local.kind != ViolationKind::Budget) return local;
  if (m.presentation().num_crossings() <= 12) {
    VerifyReport r = verify_matching_exhaustive(m, 200'000);
    if (r.kind != ViolationKind::Budget) return r;
  }
  return verify_matching_layered(m);
}

CycleSearch find_cycles(const Matching& m, int max_len, size_t cell_budget, size_t cycle_budget) {
  CycleSearch res;
  const MorsePresentation& p = m.presentation();
  auto cells = bounded_cells(p, cell_budget);
  if (!cells) {
    res.budget_exceeded = true;
    return res;
  }
  // Cycles alternate between a forward edge out of a matched source and the
  // reversed matched edge back down, so it is enough to walk over sources.
  std::vector<Word> sources;
  std::unordered_map<Word, int> index;
  for (const Word& c : *cells) {
    auto mi = m.lookup(c);
    if (mi && mi->source) {
      index.emplace(c, static_cast<int>(sources.size()));
      sources.push_back(c);
    }
  }
  struct Arc {
    int to;
    Word via;
  };
  std::vector<std::vector<Arc>> adj(sources.size());
  for (size_t s = 0; s < sources.size(); ++s) {
    const Word& x = sources[s];
    const Word partner = m.lookup(x)->partner;
    for (auto& nb : out_neighbors(p, x)) {
      if (nb.cell == partner) continue;
      auto my = m.lookup(nb.cell);
      if (!my || my->source) continue;
      adj[s].push_back({index.at(my->partner), std::move(nb.cell)});
    }
  }
  // strongly connected components (Tarjan, iterative)
  const int n = static_cast<int>(sources.size());
  std::vector<int> comp(n, -1), low(n), num(n, -1), stk;
  std::vector<char> on(n, 0);
  int counter = 0, ncomp = 0;
  for (int r = 0; r < n; ++r) {
    if (num[r] >= 0) continue;
    std::vector<std::pair<int, size_t>> call{{r, 0}};
    num[r] = low[r] = counter++;
    stk.push_back(r);
    on[r] = 1;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < adj[v].size()) {
        int w = adj[v][pos++].to;
        if (num[w] < 0) {
          num[w] = low[w] = counter++;
          stk.push_back(w);
          on[w] = 1;
          call.push_back({w, 0});
        } else if (on[w]) {
          low[v] = std::min(low[v], num[w]);
        }
      } else {
        if (low[v] == num[v]) {
          while (true) {
            int w = stk.back();
            stk.pop_back();
            on[w] = 0;
            comp[w] = ncomp;
            if (w == v) break;
          }
          ++ncomp;
        }
        int done = v;
        call.pop_back();
        if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      }
    }
  }
  // bounded enumeration of elementary cycles, each rooted at its smallest vertex
  const int max_steps = max_len / 2;
  std::vector<int> path;
  std::vector<const Word*> vias;
  std::vector<char> in_path(n, 0);
  std::function<void(int, int)> dfs = [&](int root, int v) {
    if (res.cycles.size() >= cycle_budget) {
      res.budget_exceeded = true;
      return;
    }
    for (const Arc& a : adj[v]) {
      if (comp[a.to] != comp[root] || a.to < root) continue;
      if (a.to == root) {
        CycleReport cr;
        for (size_t t = 0; t < path.size(); ++t) {
          cr.cycle.push_back(sources[path[t]]);
          cr.cycle.push_back(t + 1 < path.size() ? *vias[t] : a.via);
        }
        res.cycles.push_back(std::move(cr));
        continue;
      }
      if (in_path[a.to] || static_cast<int>(path.size()) >= max_steps) continue;
      path.push_back(a.to);
      vias.push_back(&a.via);
      in_path[a.to] = 1;
      dfs(root, a.to);
      in_path[a.to] = 0;
      vias.pop_back();
      path.pop_back();
    }
  };
  for (int r = 0; r < n && !res.budget_exceeded; ++r) {
    path = {r};
    in_path[r] = 1;
    dfs(r, r);
    in_path[r] = 0;
  }
  std::sort(res.cycles.begin(), res.cycles.end(),
            [](const CycleReport& a, const CycleReport& b) { return a.length() < b.length(); });
  return res;
}

namespace {

std::vector<Word> cells_within(const Matching& m, size_t cell_budget) {
  const MorsePresentation& p = m.presentation();
  std::vector<Word> cur{Word{}};
  for (int l = 1; l <= p.num_layers(); ++l) {
    cur = expand(p, cur);
    if (cur.size() > cell_budget)
      throw Error(ErrorCode::BudgetExceeded, "more than " + std::to_string(cell_budget) + " cells");
  }
  std::sort(cur.begin(), cur.end(),
            [](const Word& a, const Word& b) { return word_to_string(a) < word_to_string(b); });
  return cur;
}

}  // namespace

std::string matching_dump(const Matching& m, size_t cell_budget) {
  std::string out;
  for (const Word& w : cells_within(m, cell_budget)) {
    auto mi = m.lookup(w);
    if (!mi || !mi->source) continue;
    out += word_to_string(w) + " => " + word_to_string(mi->partner) + " i=" + std::to_string(mi->j) +
           " u=" + std::to_string(mi->level) + "\n";
  }
  return out;
}

std::string cell_graph_dot(const Matching& m, size_t cell_budget) {
  const MorsePresentation& p = m.presentation();
  std::string out = "digraph G {\n  rankdir=BT;\n";
  auto quote = [](const Word& w) { return "\"" + word_to_string(w) + "\""; };
  for (const Word& w : cells_within(m, cell_budget)) {
    const auto mi = m.lookup(w);
    const Grading g = gradings(p, w);
    out += "  " + quote(w) + " [label=\"" + word_to_string(w) + "\\n(" + std::to_string(g.h) + "," +
           std::to_string(g.q) + ")\"" + (mi ? "" : ", shape=box") + "];\n";
    for (const auto& nb : out_neighbors(p, w)) {
      const bool matched = mi && mi->source && mi->partner == nb.cell;
      if (matched) out += "  " + quote(nb.cell) + " -> " + quote(w) + " [style=bold, color=red];\n";
      else out += "  " + quote(w) + " -> " + quote(nb.cell) + " [label=\"" + edge_kind_name(nb.cls.kind) + "\"];\n";
    }
  }
  return out + "}\n";
}

std::string cycles_json(const CycleSearch& s) {
  std::string out = "{\"budget_exceeded\":" + std::string(s.budget_exceeded ? "true" : "false") + ",\"cycles\":[";
  for (size_t c = 0; c < s.cycles.size(); ++c) {
    out += c ? ",[" : "[";
    for (size_t i = 0; i < s.cycles[c].cycle.size(); ++i)
      out += (i ? ",\"" : "\"") + word_to_string(s.cycles[c].cycle[i]) + "\"";
    out += "]";
  }
  return out + "]}";
}

}  // namespace kvm
