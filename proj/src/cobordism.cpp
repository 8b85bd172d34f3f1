#include "cobordism.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <unordered_map>

#include <json.hpp>

namespace kvm {

namespace {

int64_t checked_mul(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::Internal, "cobordism coefficient overflow");
  return r;
}

int64_t checked_add(int64_t a, int64_t b) {
  int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::Internal, "cobordism coefficient overflow");
  return r;
}

void normalize(CobTerms& t) {
  std::sort(t.begin(), t.end(), [](const CobTerm& a, const CobTerm& b) { return a.dots < b.dots; });
  size_t out = 0;
  for (size_t i = 0; i < t.size();) {
    int64_t c = 0;
    size_t j = i;
    for (; j < t.size() && t[j].dots == t[i].dots; ++j) c = checked_add(c, t[j].coeff);
    if (c != 0) t[out++] = {t[i].dots, c};
    i = j;
  }
  t.resize(out);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// How the summands of f: D1 -> D2 and g: D2 -> D3 glue. Every component of the
// glued surface is a union of discs; it is described by the discs it contains
// and the circles of D1 ∪ D3 on its boundary.
struct GluePlan {
  struct Component {
    uint32_t f_discs = 0;  // bits over circles(D1, D2)
    uint32_t g_discs = 0;  // bits over circles(D2, D3)
    std::vector<int> out;  // circles of D1 ∪ D3
    int genus = 0;
  };
  std::vector<Component> comps;
};

GluePlan plan_glue(const Pairing& d1, const Pairing& d2, const Pairing& d3) {
  const CircleMap c12 = circles(d1, d2);
  const CircleMap c23 = circles(d2, d3);
  const CircleMap c13 = circles(d1, d3);
  const int n = static_cast<int>(d2.size());
  UnionFind uf(c12.count + c23.count);
  for (int p = 0; p < n; ++p) uf.unite(c12.of_point[p], c12.count + c23.of_point[p]);
  std::map<int, int> index;
  GluePlan plan;
  auto comp = [&](int node) -> GluePlan::Component& {
    auto [it, fresh] = index.emplace(uf.find(node), static_cast<int>(plan.comps.size()));
    if (fresh) plan.comps.emplace_back();
    return plan.comps[it->second];
  };
  for (int c = 0; c < c12.count; ++c) comp(c).f_discs |= 1u << c;
  for (int c = 0; c < c23.count; ++c) comp(c12.count + c).g_discs |= 1u << c;
  std::vector<int> arcs(plan.comps.size(), 0);
  for (int p = 0; p < n; ++p)
    if (p < d2[p]) ++arcs[index[uf.find(c12.of_point[p])]];
  std::vector<char> seen(c13.count, 0);
  for (int p = 0; p < n; ++p) {
    const int c = c13.of_point[p];
    if (seen[c]) continue;
    seen[c] = 1;
    plan.comps[index[uf.find(c12.of_point[p])]].out.push_back(c);
  }
  for (size_t k = 0; k < plan.comps.size(); ++k) {
    auto& cp = plan.comps[k];
    const int discs = std::popcount(cp.f_discs) + std::popcount(cp.g_discs);
    const int euler = discs - arcs[k];
    const int twice_g = 2 - euler - static_cast<int>(cp.out.size());
    if (twice_g < 0 || twice_g % 2) throw Error(ErrorCode::Internal, "glued surface has negative genus");
    cp.genus = twice_g / 2;
  }
  return plan;
}

struct PlanKey {
  Pairing a, b, c;
  bool operator==(const PlanKey&) const = default;
};

struct PlanKeyHash {
  size_t operator()(const PlanKey& k) const {
    size_t h = 1469598103934665603ull;
    for (const Pairing* p : {&k.a, &k.b, &k.c}) {
      for (int x : *p) h = (h ^ static_cast<size_t>(x + 1)) * 1099511628211ull;
      h = (h ^ 0xff) * 1099511628211ull;
    }
    return h;
  }
};

const GluePlan& cached_plan(const Pairing& d1, const Pairing& d2, const Pairing& d3) {
  thread_local std::unordered_map<PlanKey, GluePlan, PlanKeyHash> cache;
  PlanKey key{d1, d2, d3};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  if (cache.size() > 200000) cache.clear();
  return cache.emplace(std::move(key), plan_glue(d1, d2, d3)).first->second;
}

CobTerms compose_terms(const GluePlan& plan, const CobTerms& f, const CobTerms& g) {
  CobTerms out;
  std::vector<CobTerm> acc, next;
  for (const CobTerm& tf : f) {
    for (const CobTerm& tg : g) {
      acc.assign(1, {0, checked_mul(tf.coeff, tg.coeff)});
      for (const auto& cp : plan.comps) {
        const int dots = std::popcount(tf.dots & cp.f_discs) + std::popcount(tg.dots & cp.g_discs);
        CobTerms nf = connected_normal_form(static_cast<int>(cp.out.size()), cp.genus, dots);
        if (nf.empty()) {
          acc.clear();
          break;
        }
        next.clear();
        for (const CobTerm& a : acc)
          for (const CobTerm& t : nf) {
            uint32_t bits = a.dots;
            for (size_t i = 0; i < cp.out.size(); ++i)
              if (t.dots >> i & 1) bits |= 1u << cp.out[i];
            next.push_back({bits, checked_mul(a.coeff, t.coeff)});
          }
        acc.swap(next);
      }
      out.insert(out.end(), acc.begin(), acc.end());
    }
  }
  normalize(out);
  return out;
}

}  // namespace

CircleMap circles(const Pairing& a, const Pairing& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "pairings on different point sets");
  CircleMap m;
  m.of_point.assign(a.size(), -1);
  for (size_t s = 0; s < a.size(); ++s) {
    if (m.of_point[s] >= 0) continue;
    int p = static_cast<int>(s);
    while (m.of_point[p] < 0) {
      m.of_point[p] = m.count;
      const int q = a[p];
      m.of_point[q] = m.count;
      p = b[q];
    }
    ++m.count;
  }
  return m;
}

CobTerms connected_normal_form(int boundary, int genus, int dots) {
  // X^dots (2X)^genus pushed through the comultiplication, with X² = 0
  const int e = dots + genus;
  if (e >= 2) return {};
  const int64_t c = int64_t{1} << genus;
  if (boundary == 0) return e == 1 ? CobTerms{{0, c}} : CobTerms{};
  const uint32_t all = (1u << boundary) - 1;
  if (e == 1) return {{all, c}};
  CobTerms out;
  for (int i = 0; i < boundary; ++i) out.push_back({all & ~(1u << i), 1});
  std::sort(out.begin(), out.end(), [](const CobTerm& x, const CobTerm& y) { return x.dots < y.dots; });
  return out;
}

DottedCobordism identity_cobordism(const Pairing& d, int64_t coeff) {
  DottedCobordism f{d, d, {}};
  if (coeff != 0) f.terms.push_back({0, coeff});
  return f;
}

DottedCobordism dotted_identity(const Pairing& d, int point, int64_t coeff) {
  DottedCobordism f{d, d, {}};
  const CircleMap c = circles(d, d);
  if (coeff != 0) f.terms.push_back({1u << c.of_point[point], coeff});
  return f;
}

DottedCobordism saddle_cobordism(const Pairing& a, const Pairing& b, int64_t coeff) {
  const CircleMap c = circles(a, b);
  if (c.count * 2 + 2 != static_cast<int>(a.size()))
    throw Error(ErrorCode::ShapeMismatch, "diagrams do not differ by one saddle");
  DottedCobordism f{a, b, {}};
  if (coeff != 0) f.terms.push_back({0, coeff});
  return f;
}

DottedCobordism compose(const DottedCobordism& f, const DottedCobordism& g) {
  if (f.target != g.source) throw Error(ErrorCode::ShapeMismatch, "compose: target and source differ");
  DottedCobordism r{f.source, g.target, {}};
  if (f.is_zero() || g.is_zero()) return r;
  r.terms = compose_terms(cached_plan(f.source, f.target, g.target), f.terms, g.terms);
  return r;
}

DottedCobordism add(const DottedCobordism& f, const DottedCobordism& g) {
  if (f.source != g.source || f.target != g.target) throw Error(ErrorCode::ShapeMismatch, "add: different diagrams");
  DottedCobordism r = f;
  r.terms.insert(r.terms.end(), g.terms.begin(), g.terms.end());
  normalize(r.terms);
  return r;
}

DottedCobordism scale(const DottedCobordism& f, int64_t c) {
  DottedCobordism r{f.source, f.target, {}};
  if (c == 0) return r;
  for (const auto& t : f.terms) r.terms.push_back({t.dots, checked_mul(t.coeff, c)});
  return r;
}

int term_degree(const DottedCobordism& f, const CobTerm& t) {
  const int discs = circles(f.source, f.target).count;
  return discs - 2 * std::popcount(t.dots) - static_cast<int>(f.source.size()) / 2;
}

DottedCobordism generator_cobordism(const MorsePresentation& p, const Word& a, const Word& b, const EdgeClass& e) {
  const Pairing da = scan(p, a).arc_partner;
  switch (e.kind) {
    case EdgeKind::Iso: return identity_cobordism(da, e.sign);
    case EdgeKind::Dot: return dotted_identity(da, e.dot_end, e.sign);
    case EdgeKind::Saddle: return saddle_cobordism(da, scan(p, b).arc_partner, e.sign);
    case EdgeKind::Zero: break;
  }
  throw Error(ErrorCode::Internal, "generator of a zero edge");
}

DottedCobordism remembering(const MorsePresentation& p, const Word& a, const Word& b, const EdgeClass& e, bool reversed) {
  if (!reversed) return generator_cobordism(p, a, b, e);
  if (e.kind != EdgeKind::Iso) throw Error(ErrorCode::InvertNonIso, "only isomorphisms can be reversed");
  // the inverse of s·id is s·id for s = ±1
  return identity_cobordism(scan(p, b).arc_partner, -e.sign);
}

namespace {

// Partial path sums V(y): for a cell y one degree above the sources, the sum over
// zig-zag paths from y to cells of the complex, as (cell index, D_y -> D_b terms).
using PathSum = std::vector<std::pair<int, CobTerms>>;

class PathSummer {
 public:
  PathSummer(const Matching& m, const std::unordered_map<Word, int>& index, const std::vector<MorseCell>& cells,
             const std::function<bool(const Word&)>& keep)
      : m_(m), p_(m.presentation()), index_(index), cells_(cells), keep_(keep) {}

  // ∂(a) for a cell of the complex
  PathSum differential(const Word& a) {
    const Pairing da = scan(p_, a).arc_partner;
    std::map<int, CobTerms> acc;
    for (const auto& nb : out_neighbors(p_, a)) accumulate(acc, da, nb, solve(nb.cell));
    return flatten(acc);
  }

  void clear() {
    memo_.clear();
  }
  size_t visited() const { return visited_; }

 private:
  struct Frame {
    Word y;
    Word z;            // matched partner below y
    int sign = 1;      // sign of the matched edge z -> y
    Pairing dz;
    std::vector<Neighbor> nbs;
    size_t pos = 0;
    std::map<int, CobTerms> acc;
  };

  void accumulate(std::map<int, CobTerms>& acc, const Pairing& dsrc, const Neighbor& nb, const PathSum& tail) {
    if (tail.empty()) return;
    const Pairing dy = nb.cls.kind == EdgeKind::Saddle ? scan(p_, nb.cell).arc_partner : dsrc;
    CobTerms gen;
    if (nb.cls.kind == EdgeKind::Dot) gen = {{1u << circles(dsrc, dsrc).of_point[nb.cls.dot_end], nb.cls.sign}};
    else gen = {{0, nb.cls.sign}};
    for (const auto& [b, terms] : tail) {
      const GluePlan& plan = cached_plan(dsrc, dy, cells_[b].diagram);
      CobTerms t = compose_terms(plan, gen, terms);
      auto& slot = acc[b];
      slot.insert(slot.end(), t.begin(), t.end());
      normalize(slot);
    }
  }

  static PathSum flatten(std::map<int, CobTerms>& acc) {
    PathSum out;
    for (auto& [b, t] : acc)
      if (!t.empty()) out.emplace_back(b, std::move(t));
    return out;
  }

  // V(y), computed with an explicit stack
  const PathSum& solve(const Word& y0) {
    if (auto it = memo_.find(y0); it != memo_.end()) return it->second;
    std::vector<Frame> stack;
    auto open = [&](const Word& y) -> bool {
      // returns true when y needs a frame, otherwise records V(y) directly
      auto mi = m_.lookup(y);
      if (!mi) {
        auto it = index_.find(y);
        if (it == index_.end()) {
          if (keep_ && !keep_(y)) throw Error(ErrorCode::Internal, "path left the filtered subcomplex at " + word_to_string(y));
          throw Error(ErrorCode::Internal, "unmatched cell missing from the complex: " + word_to_string(y));
        }
        PathSum v;
        v.emplace_back(it->second, CobTerms{{0, 1}});
        memo_.emplace(y, std::move(v));
        return false;
      }
      if (mi->source) {
        memo_.emplace(y, PathSum{});
        return false;
      }
      ++visited_;
      Frame f;
      f.y = y;
      f.z = mi->partner;
      f.sign = edge_sign(f.z, mi->j);
      f.dz = scan(p_, f.z).arc_partner;
      for (auto& nb : out_neighbors(p_, f.z))
        if (nb.cell != y) f.nbs.push_back(std::move(nb));
      on_stack_.insert(y);
      stack.push_back(std::move(f));
      return true;
    };
    open(y0);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.pos < f.nbs.size()) {
        const Neighbor& nb = f.nbs[f.pos];
        auto it = memo_.find(nb.cell);
        if (it == memo_.end()) {
          if (on_stack_.count(nb.cell))
            throw Error(ErrorCode::MatchingNotAcyclic, "zig-zag path returns to " + word_to_string(nb.cell));
          Word next = nb.cell;
          open(next);
          continue;  // f may be invalid now; revisit the top
        }
        accumulate(f.acc, f.dz, nb, it->second);
        ++f.pos;
        continue;
      }
      // the reversed matched edge y -> z contributes -sign · id
      PathSum v = flatten(f.acc);
      for (auto& [b, t] : v)
        for (auto& term : t) term.coeff = checked_mul(term.coeff, -f.sign);
      on_stack_.erase(f.y);
      Word y = std::move(f.y);
      stack.pop_back();
      memo_.emplace(std::move(y), std::move(v));
    }
    return memo_.at(y0);
  }

  const Matching& m_;
  const MorsePresentation& p_;
  const std::unordered_map<Word, int>& index_;
  const std::vector<MorseCell>& cells_;
  const std::function<bool(const Word&)>& keep_;
  std::unordered_map<Word, PathSum> memo_;
  std::unordered_set<Word> on_stack_;
  size_t visited_ = 0;
};

}  // namespace

namespace {

void check_entry_degree(const MorseComplex& c, int a, int b, const CobTerms& terms) {
  DottedCobordism f{c.cells[a].diagram, c.cells[b].diagram, terms};
  for (const auto& t : terms)
    if (term_degree(f, t) != c.cells[a].grading.q - c.cells[b].grading.q)
      throw Error(ErrorCode::Internal, "entry of nonzero degree from " + word_to_string(c.cells[a].word));
}

void sort_entries(MorseComplex& c) {
  std::sort(c.entries.begin(), c.entries.end(),
            [](const MorseEntry& x, const MorseEntry& y) { return std::pair(x.from, x.to) < std::pair(y.from, y.to); });
}

MorseComplex build_direct(const Matching& m, const MorseOptions& opts) {
  MorseComplex c;
  c.presentation = m.presentation();
  c.kind = m.kind();
  c.full_cube = m.max_level() == 0;
  const MorsePresentation& p = c.presentation;
  for (const Word& w : m.unmatched()) {
    if (opts.keep && !opts.keep(w)) continue;
    c.cells.push_back({w, gradings(p, w), scan(p, w).arc_partner});
  }
  std::stable_sort(c.cells.begin(), c.cells.end(),
                   [](const MorseCell& a, const MorseCell& b) { return a.grading.h < b.grading.h; });
  std::unordered_map<Word, int> index;
  for (size_t i = 0; i < c.cells.size(); ++i) index.emplace(c.cells[i].word, static_cast<int>(i));

  PathSummer summer(m, index, c.cells, opts.keep);
  int current_h = INT32_MIN;
  for (size_t a = 0; a < c.cells.size(); ++a) {
    // memoized sums only live one degree above the current sources
    if (c.cells[a].grading.h != current_h) {
      summer.clear();
      current_h = c.cells[a].grading.h;
    }
    for (auto& [b, terms] : summer.differential(c.cells[a].word)) {
      if (c.cells[b].grading.h != current_h + 1) throw Error(ErrorCode::Internal, "differential changes h by more than one");
      if (opts.check_degree) check_entry_degree(c, static_cast<int>(a), b, terms);
      c.entries.push_back({static_cast<int>(a), b, std::move(terms)});
    }
  }
  c.memo_cells = summer.visited();
  sort_entries(c);
  if (opts.check_d2) check_d_squared(c);
  return c;
}

// The smoothing a layer token contributes between the cut below the layer (w
// points) and the cut above it.
struct Smoothing {
  std::vector<int> strand_to;  // per lower point: upper point, or -1 when capped
  int cap = -1;                // lower points cap, cap+1 are joined
  int cup = -1;                // upper points cup, cup+1 are joined
};

Smoothing smoothing_of(const Layer& L, int base, int w) {
  Smoothing s;
  const int c = L.pos - 1;
  s.strand_to.resize(w);
  for (int j = 0; j < w; ++j) s.strand_to[j] = j;
  switch (L.kind) {
    case LayerKind::Positive:
    case LayerKind::Negative:
      if (is_horizontal(L.kind, base)) {
        s.cap = s.cup = c;
        s.strand_to[c] = s.strand_to[c + 1] = -1;
      }
      break;
    case LayerKind::Cap:
      s.cap = c;
      for (int j = 0; j < w; ++j) s.strand_to[j] = j < c ? j : j > c + 1 ? j - 2 : -1;
      break;
    case LayerKind::Cup:
      s.cup = c;
      for (int j = c; j < w; ++j) s.strand_to[j] = j + 2;
      break;
  }
  return s;
}

// f ⊗ id over one smoothing of the next layer, followed by the delooping
// isomorphisms when the smoothing closes a loop: the source loop is filled with
// a disc (dotted for blue), the target loop is capped (dotted for red). The
// result lives over the circles of ea ∪ eb, the loopless diagrams one cut up.
CobTerms extend_terms(const CobTerms& f, const Pairing& da, const Pairing& db, const Pairing& ea, const Pairing& eb,
                      int b, const Smoothing& s, Color ca, Color cb) {
  const int w = static_cast<int>(da.size()) - b;
  const CircleMap c12 = circles(da, db);
  int pieces = 0;
  std::vector<int> fdisc(c12.count);
  for (auto& d : fdisc) d = pieces++;
  const int cap_strip = s.cap >= 0 ? pieces++ : -1;
  std::vector<int> strip(w);
  for (int j = 0; j < w; ++j) strip[j] = s.strand_to[j] >= 0 ? pieces++ : cap_strip;
  const int cup_strip = s.cup >= 0 ? pieces++ : -1;
  const bool in_loop = s.cap >= 0 && da[b + s.cap] == b + s.cap + 1;
  const bool out_loop = s.cap >= 0 && db[b + s.cap] == b + s.cap + 1;
  if (in_loop != (ca != Color::None) || out_loop != (cb != Color::None))
    throw Error(ErrorCode::Internal, "loop colors do not match the smoothing");
  const int in_disc = in_loop ? pieces++ : -1;
  const int out_disc = out_loop ? pieces++ : -1;

  UnionFind uf(pieces);
  for (int j = 0; j < w; ++j) uf.unite(fdisc[c12.of_point[b + j]], strip[j]);
  if (in_loop) uf.unite(in_disc, cap_strip);
  if (out_loop) uf.unite(out_disc, cap_strip);

  std::map<int, int> index;
  struct Comp {
    uint32_t f_discs = 0;
    int extra_dots = 0;
    int euler = 0;
    std::vector<int> out;
    int genus = 0;
  };
  std::vector<Comp> comps;
  auto comp = [&](int piece) -> Comp& {
    auto [it, fresh] = index.emplace(uf.find(piece), static_cast<int>(comps.size()));
    if (fresh) comps.emplace_back();
    return comps[it->second];
  };
  for (int x = 0; x < pieces; ++x) ++comp(x).euler;
  for (int j = 0; j < w; ++j) --comp(strip[j]).euler;  // one glued segment per lower point
  for (int d = 0; d < c12.count; ++d) comp(fdisc[d]).f_discs |= 1u << d;
  if (in_loop && ca == Color::Blue) ++comp(in_disc).extra_dots;
  if (out_loop && cb == Color::Red) ++comp(out_disc).extra_dots;

  const int w_up = static_cast<int>(ea.size()) - b;
  std::vector<int> from(w_up, -1);
  for (int j = 0; j < w; ++j)
    if (s.strand_to[j] >= 0) from[s.strand_to[j]] = j;
  const CircleMap c13 = circles(ea, eb);
  std::vector<char> seen(c13.count, 0);
  for (int x = 0; x < b + w_up; ++x) {
    const int c = c13.of_point[x];
    if (seen[c]) continue;
    seen[c] = 1;
    int piece;
    if (x < b) piece = fdisc[c12.of_point[x]];
    else if (s.cup >= 0 && (x - b == s.cup || x - b == s.cup + 1)) piece = cup_strip;
    else piece = strip[from[x - b]];
    comp(piece).out.push_back(c);
  }
  for (auto& cp : comps) {
    const int twice_g = 2 - cp.euler - static_cast<int>(cp.out.size());
    if (twice_g < 0 || twice_g % 2) throw Error(ErrorCode::Internal, "extended surface has negative genus");
    cp.genus = twice_g / 2;
  }

  CobTerms out;
  std::vector<CobTerm> acc, next;
  for (const CobTerm& t : f) {
    acc.assign(1, {0, t.coeff});
    for (const auto& cp : comps) {
      const int dots = std::popcount(t.dots & cp.f_discs) + cp.extra_dots;
      CobTerms nf = connected_normal_form(static_cast<int>(cp.out.size()), cp.genus, dots);
      if (nf.empty()) {
        acc.clear();
        break;
      }
      next.clear();
      for (const CobTerm& a : acc)
        for (const CobTerm& u : nf) {
          uint32_t bits = a.dots;
          for (size_t i = 0; i < cp.out.size(); ++i)
            if (u.dots >> i & 1) bits |= 1u << cp.out[i];
          next.push_back({bits, checked_mul(a.coeff, u.coeff)});
        }
      acc.swap(next);
    }
    out.insert(out.end(), acc.begin(), acc.end());
  }
  normalize(out);
  return out;
}

struct LayerCell {
  Word word;
  Pairing diagram;
  Grading grading;
};

using Adjacency = std::vector<std::vector<std::pair<int, CobTerms>>>;

void add_into(std::vector<std::pair<int, CobTerms>>& row, int to, CobTerms t) {
  if (t.empty()) return;
  for (auto& [x, v] : row)
    if (x == to) {
      v.insert(v.end(), t.begin(), t.end());
      normalize(v);
      return;
    }
  row.emplace_back(to, std::move(t));
}

// Cancels the pairs of one level inside an explicit complex. V(y) is the sum
// over zig-zag paths from y to unmatched cells.
class LevelReducer {
 public:
  LevelReducer(const std::vector<LayerCell>& cells, const Adjacency& adj, const std::vector<int>& partner,
               const std::vector<char>& is_source, const std::vector<int>& sign, const std::vector<int>& new_index,
               const std::vector<Pairing>& survivors)
      : cells_(cells), adj_(adj), partner_(partner), is_source_(is_source), sign_(sign), new_index_(new_index),
        survivors_(survivors), memo_(cells.size()), state_(cells.size(), 0) {}

  std::vector<std::pair<int, CobTerms>> differential(int a) {
    std::vector<std::pair<int, CobTerms>> row;
    for (const auto& [y, e] : adj_[a]) push(row, a, y, e, solve(y));
    return row;
  }
  size_t visited() const { return visited_; }

 private:
  void push(std::vector<std::pair<int, CobTerms>>& row, int src, int y, const CobTerms& e, const PathSum& tail) {
    for (const auto& [t, terms] : tail) {
      const GluePlan& plan = cached_plan(cells_[src].diagram, cells_[y].diagram, survivors_[t]);
      add_into(row, t, compose_terms(plan, e, terms));
    }
  }

  const PathSum& solve(int y) {
    if (state_[y] == 2) return memo_[y];
    if (state_[y] == 1) throw Error(ErrorCode::MatchingNotAcyclic, "zig-zag path returns to " + word_to_string(cells_[y].word));
    PathSum v;
    if (partner_[y] < 0) {
      v.emplace_back(new_index_[y], CobTerms{{0, 1}});
    } else if (!is_source_[y]) {
      ++visited_;
      state_[y] = 1;
      const int z = partner_[y];
      std::vector<std::pair<int, CobTerms>> row;
      for (const auto& [y2, e] : adj_[z]) {
        if (y2 == y) continue;
        push(row, z, y2, e, solve(y2));
      }
      for (auto& [t, terms] : row) {
        for (auto& term : terms) term.coeff = checked_mul(term.coeff, -sign_[y]);
        if (!terms.empty()) v.emplace_back(t, std::move(terms));
      }
    }
    state_[y] = 2;
    memo_[y] = std::move(v);
    return memo_[y];
  }

  const std::vector<LayerCell>& cells_;
  const Adjacency& adj_;
  const std::vector<int>& partner_;
  const std::vector<char>& is_source_;
  const std::vector<int>& sign_;
  const std::vector<int>& new_index_;
  const std::vector<Pairing>& survivors_;  // diagrams of the unmatched cells, by new index
  std::vector<PathSum> memo_;
  std::vector<char> state_;
  size_t visited_ = 0;
};

MorseComplex build_by_layers(const Matching& m, const MorseOptions& opts) {
  MorseComplex c;
  c.presentation = m.presentation();
  c.kind = m.kind();
  c.full_cube = m.max_level() == 0;
  const MorsePresentation& p = c.presentation;
  const int b = p.bottom();

  std::vector<LayerCell> cur{{Word{}, scan(p, Word{}).arc_partner, gradings(p, Word{})}};
  Adjacency cur_adj(1);
  for (int level = 1; level <= p.num_layers(); ++level) {
    const Layer& L = p.layer(level);
    const int w = p.width_below(level);
    // children of every surviving cell, with their parent
    std::vector<LayerCell> kids;
    std::vector<std::vector<int>> kids_of(cur.size());
    for (size_t a = 0; a < cur.size(); ++a)
      for (Word& x : expand(p, {cur[a].word})) {
        kids_of[a].push_back(static_cast<int>(kids.size()));
        Pairing d = scan(p, x).arc_partner;
        Grading g = gradings(p, x);
        kids.push_back({std::move(x), std::move(d), g});
      }
    auto last = [&](int x) { return static_cast<uint8_t>(kids[x].word.back()); };

    Adjacency adj(kids.size());
    for (size_t a = 0; a < cur.size(); ++a) {
      // the differential of the new layer
      for (int x : kids_of[a])
        for (int y : kids_of[a]) {
          if (token_base(last(x)) != 0 || token_base(last(y)) != 1) continue;
          const EdgeClass e = classify_edge(p, kids[x].word, kids[y].word);
          if (e.kind == EdgeKind::Zero) continue;
          CobTerms gen{{0, e.sign}};
          if (e.kind == EdgeKind::Dot)
            gen[0].dots = 1u << circles(kids[x].diagram, kids[x].diagram).of_point[e.dot_end];
          add_into(adj[x], y, std::move(gen));
        }
      // the old differential, tensored with the layer
      for (const auto& [a2, f] : cur_adj[a])
        for (int x : kids_of[a])
          for (int y : kids_of[a2]) {
            if (token_base(last(x)) != token_base(last(y))) continue;
            const Smoothing s = smoothing_of(L, token_base(last(x)), w);
            add_into(adj[x], y,
                     extend_terms(f, cur[a].diagram, cur[a2].diagram, kids[x].diagram, kids[y].diagram, b, s,
                                  token_color(last(x)), token_color(last(y))));
          }
    }

    // pairs recorded at this level; each must still be ±identity here
    std::vector<int> partner(kids.size(), -1), sign(kids.size(), 0);
    std::vector<char> is_source(kids.size(), 0);
    std::unordered_map<Word, int> kid_index;
    for (size_t x = 0; x < kids.size(); ++x) kid_index.emplace(kids[x].word, static_cast<int>(x));
    for (size_t x = 0; x < kids.size(); ++x) {
      auto mi = m.lookup_at(kids[x].word, level);
      if (!mi) continue;
      auto it = kid_index.find(mi->partner);
      if (it == kid_index.end()) throw Error(ErrorCode::Internal, "matched partner was cancelled earlier: " + word_to_string(mi->partner));
      partner[x] = it->second;
      is_source[x] = mi->source;
    }
    for (size_t x = 0; x < kids.size(); ++x) {
      if (partner[x] < 0 || !is_source[x]) continue;
      const int y = partner[x];
      const CobTerms* v = nullptr;
      for (const auto& [t, terms] : adj[x])
        if (t == y) v = &terms;
      if (!v || kids[x].diagram != kids[y].diagram || v->size() != 1 || v->front().dots != 0 ||
          std::abs(v->front().coeff) != 1)
        throw Error(ErrorCode::MatchingNotAcyclic,
                    "pair " + word_to_string(kids[x].word) + " -> " + word_to_string(kids[y].word) + " is not an isomorphism");
      sign[y] = static_cast<int>(v->front().coeff);
    }

    std::vector<int> new_index(kids.size(), -1);
    std::vector<LayerCell> next;
    for (size_t x = 0; x < kids.size(); ++x)
      if (partner[x] < 0) {
        new_index[x] = static_cast<int>(next.size());
        next.push_back(kids[x]);
      }
    std::vector<Pairing> survivors;
    for (const auto& cell : next) survivors.push_back(cell.diagram);
    LevelReducer red(kids, adj, partner, is_source, sign, new_index, survivors);
    Adjacency next_adj(next.size());
    for (size_t x = 0; x < kids.size(); ++x)
      if (partner[x] < 0) next_adj[new_index[x]] = red.differential(static_cast<int>(x));
    c.memo_cells += red.visited();
    cur = std::move(next);
    cur_adj = std::move(next_adj);
  }

  // final cells, filtered and sorted by h
  std::vector<int> order;
  for (size_t i = 0; i < cur.size(); ++i)
    if (!opts.keep || opts.keep(cur[i].word)) order.push_back(static_cast<int>(i));
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return cur[x].grading.h < cur[y].grading.h; });
  std::vector<int> pos(cur.size(), -1);
  for (size_t i = 0; i < order.size(); ++i) {
    pos[order[i]] = static_cast<int>(i);
    c.cells.push_back({cur[order[i]].word, cur[order[i]].grading, cur[order[i]].diagram});
  }
  for (int x : order)
    for (auto& [y, terms] : cur_adj[x]) {
      if (terms.empty()) continue;
      if (pos[y] < 0) throw Error(ErrorCode::Internal, "differential leaves the filtered subcomplex at " + word_to_string(cur[y].word));
      if (cur[y].grading.h != cur[x].grading.h + 1) throw Error(ErrorCode::Internal, "differential changes h by more than one");
      if (opts.check_degree) check_entry_degree(c, pos[x], pos[y], terms);
      c.entries.push_back({pos[x], pos[y], std::move(terms)});
    }
  sort_entries(c);
  if (opts.check_d2) check_d_squared(c);
  return c;
}

}  // namespace

MorseComplex build_morse_complex(const Matching& m, const MorseOptions& opts) {
  return opts.direct ? build_direct(m, opts) : build_by_layers(m, opts);
}

size_t check_d_squared(const MorseComplex& c) {
  std::vector<std::vector<const MorseEntry*>> out(c.cells.size());
  for (const auto& e : c.entries) out[e.from].push_back(&e);
  size_t checked = 0;
  for (size_t a = 0; a < c.cells.size(); ++a) {
    std::map<int, CobTerms> sum;
    for (const MorseEntry* e1 : out[a])
      for (const MorseEntry* e2 : out[e1->to]) {
        const GluePlan& plan =
            cached_plan(c.cells[a].diagram, c.cells[e1->to].diagram, c.cells[e2->to].diagram);
        CobTerms t = compose_terms(plan, e1->value, e2->value);
        auto& slot = sum[e2->to];
        slot.insert(slot.end(), t.begin(), t.end());
      }
    for (auto& [target, t] : sum) {
      normalize(t);
      ++checked;
      if (!t.empty())
        throw Error(ErrorCode::Internal, "d² ≠ 0 from " + word_to_string(c.cells[a].word) + " to " +
                                             word_to_string(c.cells[target].word));
    }
  }
  return checked;
}

std::vector<DegreeCount> dim_cob_per_degree(const MorseComplex& c) {
  std::map<std::pair<int, int>, size_t> counts;
  for (const auto& cell : c.cells) ++counts[{cell.grading.h, cell.grading.q}];
  std::vector<DegreeCount> out;
  for (const auto& [k, n] : counts) out.push_back({k.first, k.second, n});
  return out;
}

size_t dim_kom(const MorseComplex& c) { return c.cells.size(); }

std::string morse_complex_json(const MorseComplex& c) {
  nlohmann::json j;
  j["presentation"] = serialize_tangle(c.presentation);
  j["matching"] = c.full_cube ? "none" : matching_kind_name(c.kind);
  auto& cells = j["cells"] = nlohmann::json::array();
  for (const auto& cell : c.cells)
    cells.push_back({{"word", word_to_string(cell.word)}, {"h", cell.grading.h}, {"q", cell.grading.q}});
  auto& entries = j["entries"] = nlohmann::json::array();
  for (const auto& e : c.entries) {
    const CircleMap cm = circles(c.cells[e.from].diagram, c.cells[e.to].diagram);
    // a summand is identified by the circles of source ∪ target (as the smallest
    // boundary point on each) and the set of dotted circles
    std::vector<int> first(cm.count, -1);
    for (size_t pt = 0; pt < cm.of_point.size(); ++pt)
      if (first[cm.of_point[pt]] < 0) first[cm.of_point[pt]] = static_cast<int>(pt);
    auto terms = nlohmann::json::array();
    for (const auto& t : e.value) {
      std::vector<int> dotted;
      for (int k = 0; k < cm.count; ++k)
        if (t.dots >> k & 1) dotted.push_back(first[k]);
      terms.push_back({{"circles", first}, {"dots", dotted}, {"coeff", t.coeff}});
    }
    entries.push_back({{"from", e.from}, {"to", e.to}, {"terms", terms}});
  }
  return j.dump();
}

}  // namespace kvm
