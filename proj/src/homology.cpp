#include "homology.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace kvm {

Ring parse_ring(std::string_view s) {
  if (s == "Z" || s == "z") return {0};
  if (s.size() >= 2 && (s[0] == 'F' || s[0] == 'f')) {
    int p = 0;
    for (char ch : s.substr(1)) {
      if (ch < '0' || ch > '9') throw Error(ErrorCode::ParseError, "bad ring: " + std::string(s));
      p = p * 10 + (ch - '0');
      if (p > 1'000'000) throw Error(ErrorCode::ParseError, "prime too large: " + std::string(s));
    }
    if (p < 2) throw Error(ErrorCode::ParseError, "bad ring: " + std::string(s));
    for (int k = 2; k * k <= p; ++k)
      if (p % k == 0) throw Error(ErrorCode::ParseError, std::to_string(p) + " is not prime");
    return {p};
  }
  throw Error(ErrorCode::ParseError, "bad ring: " + std::string(s));
}

namespace {

// Row-major sparse integer matrix with a column index, for elimination.
class EliminationMatrix {
 public:
  explicit EliminationMatrix(const SparseMatrix& m) : rows_(m.rows), cols_(m.cols) {
    for (const auto& e : m.entries) {
      if (e.value == 0) continue;
      rows_[e.row][e.col] = static_cast<long>(e.value);
      cols_[e.col].insert(e.row);
    }
  }

  // row dst -= f * row src
  void axpy(int dst, const mpz_class& f, int src) {
    auto& d = rows_[dst];
    for (const auto& [c, v] : rows_[src]) {
      auto it = d.find(c);
      if (it == d.end()) {
        d.emplace(c, -f * v);
        cols_[c].insert(dst);
      } else {
        it->second -= f * v;
        if (it->second == 0) {
          d.erase(it);
          cols_[c].erase(dst);
        }
      }
    }
  }

  // drop row r and column c once they hold nothing but the pivot
  void remove(int r, int c) {
    for (const auto& [col, v] : rows_[r]) cols_[col].erase(r);
    rows_[r].clear();
    for (int row : cols_[c]) rows_[row].erase(c);
    cols_[c].clear();
  }

  // Pivot at (r, c) with a unit value: clear the column by row operations. The
  // row is then cleared by column operations that touch nothing else.
  void eliminate_unit(int r, int c) {
    const mpz_class u = rows_[r].at(c);  // ±1, its own inverse
    std::vector<int> others(cols_[c].begin(), cols_[c].end());
    for (int r2 : others) {
      if (r2 == r) continue;
      const mpz_class f = rows_[r2].at(c) * u;
      axpy(r2, f, r);
    }
    remove(r, c);
  }

  // Euclid on the row and column through (r, c) until the pivot divides both;
  // returns the pivot's absolute value. Truncated remainders are strictly
  // smaller than the pivot, so every restart shrinks it.
  mpz_class eliminate_general(int r, int c) {
    for (;;) {
      bool restart = false;
      std::vector<int> others(cols_[c].begin(), cols_[c].end());
      for (int r2 : others) {
        if (r2 == r) continue;
        mpz_class q;
        mpz_tdiv_q(q.get_mpz_t(), rows_[r2].at(c).get_mpz_t(), rows_[r].at(c).get_mpz_t());
        if (q != 0) axpy(r2, q, r);
        if (rows_[r2].count(c)) {
          r = r2;
          restart = true;
          break;
        }
      }
      if (restart) continue;
      // column c holds only the pivot, so column operations change row r alone
      const mpz_class piv = rows_[r].at(c);
      int next_c = -1;
      std::vector<std::pair<int, mpz_class>> rest;
      for (const auto& [c2, v] : rows_[r])
        if (c2 != c) rest.emplace_back(c2, v);
      for (auto& [c2, v] : rest) {
        mpz_class rem;
        mpz_tdiv_r(rem.get_mpz_t(), v.get_mpz_t(), piv.get_mpz_t());
        if (rem == 0) {
          rows_[r].erase(c2);
          cols_[c2].erase(r);
        } else {
          rows_[r][c2] = rem;
          next_c = c2;
        }
      }
      if (next_c >= 0) {
        c = next_c;
        continue;
      }
      remove(r, c);
      return abs(piv);
    }
  }

  // unit entries, cheapest fill-in first
  std::vector<std::pair<int, int>> unit_candidates() const {
    std::vector<std::tuple<size_t, int, int>> cand;
    for (size_t row = 0; row < rows_.size(); ++row)
      for (const auto& [col, v] : rows_[row])
        if (v == 1 || v == -1) cand.emplace_back((rows_[row].size() - 1) * (cols_[col].size() - 1), static_cast<int>(row), col);
    std::sort(cand.begin(), cand.end());
    std::vector<std::pair<int, int>> out;
    for (const auto& [cost, r, c] : cand) out.emplace_back(r, c);
    return out;
  }

  bool is_unit(int r, int c) const {
    auto it = rows_[r].find(c);
    return it != rows_[r].end() && (it->second == 1 || it->second == -1);
  }

  bool find_smallest(int& r, int& c) const {
    bool found = false;
    mpz_class best;
    for (size_t row = 0; row < rows_.size(); ++row)
      for (const auto& [col, v] : rows_[row])
        if (!found || abs(v) < best) {
          found = true;
          best = abs(v);
          r = static_cast<int>(row);
          c = col;
        }
    return found;
  }

 private:
  std::vector<std::map<int, mpz_class>> rows_;
  std::vector<std::set<int>> cols_;
};

}  // namespace

SmithForm smith_normal_form(const SparseMatrix& m) {
  EliminationMatrix a(m);
  SmithForm s;
  int ones = 0;
  std::vector<mpz_class> other;
  int r = 0, c = 0;
  for (;;) {
    bool progress = false;
    for (const auto& [ur, uc] : a.unit_candidates())
      if (a.is_unit(ur, uc)) {
        a.eliminate_unit(ur, uc);
        ++ones;
        progress = true;
      }
    if (progress) continue;
    if (!a.find_smallest(r, c)) break;
    mpz_class d = a.eliminate_general(r, c);
    if (d == 1) ++ones;
    else other.push_back(d);
  }
  // a diagonal matrix has the invariant factors obtained by repeated gcd/lcm
  for (size_t i = 0; i < other.size(); ++i)
    for (size_t j = i + 1; j < other.size(); ++j) {
      mpz_class g = gcd(other[i], other[j]);
      mpz_class l = lcm(other[i], other[j]);
      other[i] = g;
      other[j] = l;
    }
  s.rank = ones + static_cast<int>(other.size());
  s.divisors.assign(ones, 1);
  for (const auto& d : other) {
    if (d == 1) {
      s.divisors.insert(s.divisors.begin(), 1);
      continue;
    }
    if (!d.fits_slong_p()) throw Error(ErrorCode::Internal, "invariant factor exceeds 64 bits: " + d.get_str());
    s.divisors.push_back(d.get_si());
  }
  return s;
}

int rank_mod_p(const SmithForm& s, int p) {
  int r = 0;
  for (int64_t d : s.divisors) r += d % p != 0;
  return r;
}

int rank_mod_p(const SparseMatrix& m, int p) {
  auto md = [p](int64_t x) { return static_cast<int64_t>(((x % p) + p) % p); };
  auto inv = [&](int64_t x) {
    // Fermat
    int64_t r = 1, b = x, e = p - 2;
    while (e) {
      if (e & 1) r = r * b % p;
      b = b * b % p;
      e >>= 1;
    }
    return r;
  };
  std::vector<std::map<int, int64_t>> rows(m.rows);
  for (const auto& e : m.entries) {
    const int64_t v = md(e.value);
    if (v) rows[e.row][e.col] = v;
  }
  std::map<int, std::map<int, int64_t>> pivots;  // leading column -> normalized row
  int rank = 0;
  for (auto& row : rows) {
    while (!row.empty()) {
      const int lead = row.begin()->first;
      auto it = pivots.find(lead);
      if (it == pivots.end()) {
        const int64_t f = inv(row.begin()->second);
        for (auto& [c, v] : row) v = v * f % p;
        pivots.emplace(lead, std::move(row));
        ++rank;
        break;
      }
      const int64_t f = row.begin()->second;
      for (const auto& [c, v] : it->second) {
        int64_t& x = row[c];
        x = md(x - f * v);
        if (x == 0) row.erase(c);
      }
    }
  }
  return rank;
}

size_t IntegerMatrixComplex::rank() const {
  size_t n = 0;
  for (const auto& [k, b] : basis) n += b.size();
  return n;
}

namespace {

struct Closure {
  int strands = 0;  // 0 for closed diagrams
  Pairing pairing;
};

Closure closure_of(const MorsePresentation& p) {
  Closure cl;
  if (p.closed()) return cl;
  if (!is_braid(p)) throw Error(ErrorCode::NotClosed, "the TQFT needs a closed diagram or a braid");
  cl.strands = p.bottom();
  cl.pairing.resize(2 * cl.strands);
  for (int i = 0; i < cl.strands; ++i) {
    cl.pairing[i] = cl.strands + i;
    cl.pairing[cl.strands + i] = i;
  }
  return cl;
}

// How one normal-form summand of a: D_a -> D_b closes up with the closure strips.
struct ClosedPlan {
  struct Comp {
    uint32_t f_discs = 0;
    std::vector<int> in;   // circles of D_a ∪ closure
    std::vector<int> out;  // circles of D_b ∪ closure
    int genus = 0;
  };
  std::vector<Comp> comps;
};

ClosedPlan plan_closure(const Pairing& da, const Pairing& db, const Closure& cl) {
  const CircleMap c12 = circles(da, db);
  const int s = cl.strands;
  // pieces: discs of the summand, then one strip per closure strand
  const int pieces = c12.count + s;
  std::vector<int> parent(pieces);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < s; ++i) {
    parent[find(c12.of_point[i])] = find(c12.count + i);
    parent[find(c12.of_point[s + i])] = find(c12.count + i);
  }
  std::map<int, int> index;
  ClosedPlan plan;
  std::vector<int> euler;
  auto comp = [&](int piece) -> int {
    auto [it, fresh] = index.emplace(find(piece), static_cast<int>(plan.comps.size()));
    if (fresh) {
      plan.comps.emplace_back();
      euler.push_back(0);
    }
    return it->second;
  };
  for (int d = 0; d < c12.count; ++d) {
    const int k = comp(d);
    plan.comps[k].f_discs |= 1u << d;
    ++euler[k];
  }
  for (int i = 0; i < s; ++i) euler[comp(c12.count + i)] -= 1;  // one strip, two glued sides
  if (s > 0) {
    const CircleMap ca = circles(da, cl.pairing);
    const CircleMap cb = circles(db, cl.pairing);
    std::vector<char> seen_a(ca.count, 0), seen_b(cb.count, 0);
    for (int x = 0; x < 2 * s; ++x) {
      const int k = comp(c12.of_point[x]);
      if (!seen_a[ca.of_point[x]]) {
        seen_a[ca.of_point[x]] = 1;
        plan.comps[k].in.push_back(ca.of_point[x]);
      }
      if (!seen_b[cb.of_point[x]]) {
        seen_b[cb.of_point[x]] = 1;
        plan.comps[k].out.push_back(cb.of_point[x]);
      }
    }
  }
  for (size_t k = 0; k < plan.comps.size(); ++k) {
    auto& cp = plan.comps[k];
    const int twice_g = 2 - euler[k] - static_cast<int>(cp.in.size() + cp.out.size());
    if (twice_g < 0 || twice_g % 2) throw Error(ErrorCode::Internal, "closed-up surface has negative genus");
    cp.genus = twice_g / 2;
  }
  return plan;
}

// The TQFT value of one summand on an input generator: multiply the inputs,
// multiply by X^dots (2X)^genus, comultiply onto the outputs.
void apply_summand(const ClosedPlan& plan, const CobTerm& t, uint32_t in_bits,
                   std::vector<std::pair<uint32_t, int64_t>>& out) {
  std::vector<std::pair<uint32_t, int64_t>> acc{{0u, t.coeff}}, next;
  for (const auto& cp : plan.comps) {
    int e = std::popcount(t.dots & cp.f_discs) + cp.genus;
    for (int c : cp.in) e += in_bits >> c & 1;
    if (e >= 2) return;
    const int64_t scale = int64_t{1} << cp.genus;
    next.clear();
    if (cp.out.empty()) {
      if (e == 0) return;  // counit of 1
      for (auto& [b, v] : acc) next.push_back({b, v * scale});
    } else {
      uint32_t all = 0;
      for (int c : cp.out) all |= 1u << c;
      for (auto& [b, v] : acc) {
        if (e == 1) {
          next.push_back({b | all, v * scale});
        } else {
          for (int c : cp.out) next.push_back({b | (all & ~(1u << c)), v * scale});
        }
      }
    }
    acc.swap(next);
  }
  out.insert(out.end(), acc.begin(), acc.end());
}

}  // namespace

IntegerMatrixComplex apply_tqft(const MorseComplex& c, bool reduced) {
  const MorsePresentation& p = c.presentation;
  const Closure cl = closure_of(p);
  IntegerMatrixComplex out;
  const int shift = reduced ? 1 : 0;

  // generator index per (cell, bits)
  struct Loc {
    std::pair<int, int> key;
    int index;
  };
  std::vector<std::unordered_map<uint32_t, Loc>> where(c.cells.size());
  std::vector<uint32_t> base_bit(c.cells.size(), 0);
  for (size_t a = 0; a < c.cells.size(); ++a) {
    const auto& cell = c.cells[a];
    int count = 0;
    if (cl.strands > 0) {
      const CircleMap cm = circles(cell.diagram, cl.pairing);
      count = cm.count;
      base_bit[a] = 1u << cm.of_point[2 * cl.strands - 1];
    } else if (reduced) {
      if (cell.word.empty() || token_color(static_cast<uint8_t>(cell.word.back())) != Color::Blue)
        throw Error(ErrorCode::BadBasepoint, "reduced closed complex needs cells whose last loop is blue");
    }
    for (uint32_t bits = 0; bits < (1u << count); ++bits) {
      if (reduced && cl.strands > 0 && !(bits & base_bit[a])) continue;
      const int q = cell.grading.q + count - 2 * std::popcount(bits) + shift;
      const std::pair<int, int> key{cell.grading.h, q};
      auto& list = out.basis[key];
      where[a].emplace(bits, Loc{key, static_cast<int>(list.size())});
      list.push_back({static_cast<int>(a), bits});
    }
  }
  for (const auto& [key, list] : out.basis) {
    auto it = out.basis.find({key.first + 1, key.second});
    if (it == out.basis.end()) continue;
    auto& m = out.d[key];
    m.cols = static_cast<int>(list.size());
    m.rows = static_cast<int>(it->second.size());
  }

  std::map<std::pair<int, int>, std::map<std::pair<int, int>, int64_t>> acc;  // key -> (row, col) -> value
  std::vector<std::pair<uint32_t, int64_t>> images;
  for (const auto& e : c.entries) {
    const ClosedPlan plan = plan_closure(c.cells[e.from].diagram, c.cells[e.to].diagram, cl);
    for (const auto& [bits, loc] : where[e.from]) {
      images.clear();
      for (const CobTerm& t : e.value) apply_summand(plan, t, bits, images);
      for (const auto& [ob, v] : images) {
        auto it = where[e.to].find(ob);
        if (it == where[e.to].end()) {
          if (reduced) throw Error(ErrorCode::Internal, "reduced generators do not form a subcomplex");
          throw Error(ErrorCode::Internal, "missing generator");
        }
        if (it->second.key.second != loc.key.second || it->second.key.first != loc.key.first + 1)
          throw Error(ErrorCode::Internal, "TQFT image is not q-block-diagonal");
        acc[loc.key][{it->second.index, loc.index}] += v;
      }
    }
  }
  for (auto& [key, vals] : acc) {
    auto& m = out.d.at(key);
    for (const auto& [rc, v] : vals)
      if (v != 0) m.entries.push_back({rc.first, rc.second, v});
  }
  for (auto it = out.d.begin(); it != out.d.end();)
    it = it->second.entries.empty() ? out.d.erase(it) : std::next(it);
  return out;
}

IntegerMatrixComplex dual(const IntegerMatrixComplex& c) {
  IntegerMatrixComplex out;
  for (const auto& [k, b] : c.basis) out.basis[{-k.first, -k.second}] = b;
  for (const auto& [k, m] : c.d) {
    SparseMatrix t;
    t.rows = m.cols;
    t.cols = m.rows;
    for (const auto& e : m.entries) t.entries.push_back({e.col, e.row, e.value});
    out.d[{-k.first - 1, -k.second}] = std::move(t);
  }
  return out;
}

void check_d_squared(const IntegerMatrixComplex& c) {
  for (const auto& [k, m1] : c.d) {
    auto it = c.d.find({k.first + 1, k.second});
    if (it == c.d.end()) continue;
    const SparseMatrix& m2 = it->second;
    std::vector<std::vector<std::pair<int, int64_t>>> by_col(m2.cols);
    for (const auto& e : m2.entries) by_col[e.col].push_back({e.row, e.value});
    std::map<std::pair<int, int>, int64_t> prod;
    for (const auto& e : m1.entries)
      for (const auto& [r, v] : by_col[e.row]) prod[{r, e.col}] += v * e.value;
    for (const auto& [rc, v] : prod)
      if (v != 0) throw Error(ErrorCode::Internal, "integer complex has d² ≠ 0");
  }
}

HomologyTable homology(const IntegerMatrixComplex& c, Ring ring, bool reduced, bool fp_direct) {
  HomologyTable t;
  t.ring = ring;
  t.reduced = reduced;
  std::map<std::pair<int, int>, SmithForm> snf;
  std::map<std::pair<int, int>, int> rank;
  for (const auto& [k, m] : c.d) {
    if (ring.p != 0 && fp_direct) {
      rank[k] = rank_mod_p(m, ring.p);
      continue;
    }
    snf[k] = smith_normal_form(m);
    rank[k] = ring.p == 0 ? snf[k].rank : rank_mod_p(snf[k], ring.p);
  }
  for (const auto& [k, b] : c.basis) {
    const std::pair<int, int> in{k.first - 1, k.second};
    HomologyEntry e;
    e.free = static_cast<int>(b.size()) - (rank.count(k) ? rank[k] : 0) - (rank.count(in) ? rank[in] : 0);
    if (ring.p == 0 && snf.count(in))
      for (int64_t d : snf[in].divisors)
        if (d > 1) e.torsion.push_back(d);
    if (e.free != 0 || !e.torsion.empty()) t.entries[k] = e;
  }
  return t;
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Greedy: return "greedy";
    case Strategy::Lex: return "lex";
    case Strategy::FullCube: return "full-cube";
  }
  return "?";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "greedy") return Strategy::Greedy;
  if (s == "lex") return Strategy::Lex;
  if (s == "full-cube" || s == "full") return Strategy::FullCube;
  throw Error(ErrorCode::ParseError, "unknown strategy: " + std::string(s));
}

bool is_braid(const MorsePresentation& p) {
  if (p.bottom() == 0 || p.top() != p.bottom()) return false;
  for (const auto& L : p.layers())
    if (!L.is_crossing()) return false;
  return true;
}

std::string canonical_link_string(const MorsePresentation& p) {
  if (is_braid(p)) {
    std::string s = std::to_string(p.bottom()) + ":";
    for (size_t i = 0; i < p.layers().size(); ++i) {
      const auto& L = p.layers()[i];
      s += (i ? " " : "") + std::to_string(L.kind == LayerKind::Positive ? L.pos : -L.pos);
    }
    return s;
  }
  std::string s = serialize_tangle(p);
  std::replace(s.begin(), s.end(), '\n', ';');
  if (!s.empty() && s.back() == ';') s.pop_back();
  return s;
}

std::pair<int, int> oriented_crossing_counts(const MorsePresentation& p) {
  if (!p.closed()) throw Error(ErrorCode::NotClosed, "orientations are only traced on closed diagrams");
  const int L = p.num_layers();
  // nodes are (level, position); level l sits directly above layer l
  std::vector<int> first(L + 1, 0);
  int total = 0;
  for (int l = 0; l <= L; ++l) {
    first[l] = total;
    total += p.width_below(l + 1);
  }
  std::vector<std::vector<int>> adj(total);
  auto node = [&](int level, int pos) { return first[level] + pos; };
  auto link = [&](int a, int b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  for (int l = 1; l <= L; ++l) {
    const Layer& ly = p.layer(l);
    const int w = p.width_below(l), c = ly.pos - 1;
    switch (ly.kind) {
      case LayerKind::Positive:
      case LayerKind::Negative:
        for (int i = 0; i < w; ++i)
          if (i != c && i != c + 1) link(node(l - 1, i), node(l, i));
        link(node(l - 1, c), node(l, c + 1));
        link(node(l - 1, c + 1), node(l, c));
        break;
      case LayerKind::Cap:
        link(node(l - 1, c), node(l - 1, c + 1));
        for (int i = 0; i < w; ++i) {
          if (i < c) link(node(l - 1, i), node(l, i));
          else if (i > c + 1) link(node(l - 1, i), node(l, i - 2));
        }
        break;
      case LayerKind::Cup:
        link(node(l, c), node(l, c + 1));
        for (int i = 0; i < w; ++i) link(node(l - 1, i), node(l, i < c ? i : i + 2));
        break;
    }
  }
  // walk every component from the left end of its lowest cup, heading up;
  // next[v] is the node that follows v
  std::vector<int> next(total, -1);
  std::vector<char> seen(total, 0);
  for (int start = 0; start < total; ++start) {
    if (seen[start]) continue;
    // the first unseen node in level order is the left end of a cup; its
    // partner on the cup is the node to its right on the same level
    int prev = start + 1, v = start;
    do {
      seen[v] = 1;
      const int to = adj[v][0] == prev ? adj[v][1] : adj[v][0];
      next[v] = to;
      prev = v;
      v = to;
    } while (v != start);
  }
  int plus = 0, minus = 0;
  for (int l = 1; l <= L; ++l) {
    const Layer& ly = p.layer(l);
    if (!ly.is_crossing()) continue;
    const int c = ly.pos - 1;
    const bool a_up = next[node(l - 1, c)] == node(l, c + 1);
    const bool b_up = next[node(l - 1, c + 1)] == node(l, c);
    const bool positive = (ly.kind == LayerKind::Positive) == (a_up == b_up);
    (positive ? plus : minus) += 1;
  }
  return {plus, minus};
}

namespace {

// Build the Morse complex for one presentation; greedy falls back to lex when
// its matching cannot be certified.
double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

MorseComplex build_timed(const Matching& m, KhovanovResult& r, const MorseOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  MorseComplex c = build_morse_complex(m, opts);
  r.timings.morse += ms_since(t0);
  return c;
}

MorseComplex morse_for(const MorsePresentation& q, Strategy s, int max_level, bool allow_fallback, KhovanovResult& r,
                       const MorseOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  if (s == Strategy::FullCube) {
    Matching m = Matching::build(q, MatchingKind::Lex, 0);
    r.timings.matching += ms_since(t0);
    return build_timed(m, r, opts);
  }
  if (s == Strategy::Greedy) {
    Matching m = Matching::build(q, MatchingKind::Greedy, max_level);
    const VerifyReport rep = verify_matching(m);
    r.timings.matching += ms_since(t0);
    if (rep.ok()) {
      try {
        return build_timed(m, r, opts);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MatchingNotAcyclic) throw;
        r.fallback_reason = e.what();
      }
    } else {
      r.fallback_reason = rep.kind == ViolationKind::Cycle ? "greedy matching has a cycle" : "greedy matching could not be certified";
    }
    if (!allow_fallback) throw Error(ErrorCode::MatchingNotAcyclic, r.fallback_reason);
    r.fallback = true;
    r.used = Strategy::Lex;
  }
  t0 = std::chrono::steady_clock::now();
  Matching m = Matching::build(q, MatchingKind::Lex, max_level);
  const VerifyReport rep = verify_matching(m);
  r.timings.matching += ms_since(t0);
  // an inconclusive check is tolerated for the lexicographic matching, which is
  // acyclic by construction; the cancellation still checks every pair
  if (rep.kind == ViolationKind::Cycle || rep.kind == ViolationKind::NotIso)
    throw Error(ErrorCode::MatchingNotAcyclic, "lexicographic matching failed verification");
  return build_timed(m, r, opts);
}

}  // namespace

KhovanovResult khovanov(const MorsePresentation& p, const KhovanovOptions& opts) {
  KhovanovResult r;
  r.link = canonical_link_string(p);
  r.requested = r.used = opts.strategy;
  const bool braid = is_braid(p);
  if (!braid && !p.closed()) throw Error(ErrorCode::NotClosed, "khovanov needs a closed diagram or a braid");
  MorsePresentation q = p;
  if (opts.mirror_positive && opts.strategy != Strategy::FullCube && p.n_plus() > p.n_minus()) {
    q = mirror(p);
    r.mirrored = true;
  }
  MorseComplex mc;
  MorseOptions mo;
  if (braid && opts.strategy != Strategy::FullCube) {
    r.route = "open braid";
    mc = morse_for(q, opts.strategy, q.num_layers(), opts.allow_fallback, r, mo);
  } else {
    r.route = "closed diagram";
    const MorsePresentation closed = braid ? close_braid(q) : q;
    if (closed.num_layers() == 0 && opts.reduced) throw Error(ErrorCode::BadBasepoint, "the empty diagram has no basepoint");
    int max_level = closed.num_layers();
    if (opts.reduced) {
      // the last cap closes the basepoint loop; cells keep its color
      max_level = std::max(0, max_level - 1);
      mo.keep = [](const Word& w) { return !w.empty() && token_color(static_cast<uint8_t>(w.back())) == Color::Blue; };
    }
    mc = morse_for(closed, opts.strategy, max_level, opts.allow_fallback, r, mo);
  }
  r.morse_cells = mc.cells.size();
  const auto t_hom = std::chrono::steady_clock::now();
  IntegerMatrixComplex ic = apply_tqft(mc, opts.reduced);
  check_d_squared(ic);
  if (r.mirrored) ic = dual(ic);
  r.chain_rank = ic.rank();
  r.table = homology(ic, opts.ring, opts.reduced, opts.fp_direct);
  r.timings.homology = ms_since(t_hom);
  if (!braid) {
    // cells are graded by the layer labels; the link invariant needs the signs
    // the crossings have once every component is oriented
    const auto [np, nm] = oriented_crossing_counts(p);
    const int dh = p.n_minus() - nm;
    const int dq = (np - p.n_plus()) - 2 * (nm - p.n_minus());
    if (dh != 0 || dq != 0) {
      std::map<std::pair<int, int>, HomologyEntry> shifted;
      for (auto& [k, e] : r.table.entries) shifted[{k.first + dh, k.second + dq}] = std::move(e);
      r.table.entries = std::move(shifted);
    }
  }
  return r;
}

std::string homology_json(const KhovanovResult& r) {
  nlohmann::json j;
  j["link"] = r.link;
  j["ring"] = r.table.ring.name();
  j["reduced"] = r.table.reduced;
  auto& es = j["entries"] = nlohmann::json::array();
  for (const auto& [k, e] : r.table.entries)
    es.push_back({{"i", k.first}, {"j", k.second}, {"free", e.free}, {"torsion", e.torsion}});
  j["strategy"] = strategy_name(r.used);
  j["fallback"] = r.fallback;
  if (r.fallback) j["fallback_reason"] = r.fallback_reason;
  j["mirrored"] = r.mirrored;
  j["route"] = r.route;
  j["morse_cells"] = r.morse_cells;
  j["chain_rank"] = r.chain_rank;
  return j.dump();
}

std::string homology_csv(const HomologyTable& t) {
  std::ostringstream o;
  o << "i,j,free,torsion\n";
  for (const auto& [k, e] : t.entries) {
    o << k.first << ',' << k.second << ',' << e.free << ',';
    for (size_t i = 0; i < e.torsion.size(); ++i) o << (i ? ";" : "") << e.torsion[i];
    o << '\n';
  }
  return o.str();
}

namespace {

std::string cell_text(const HomologyEntry& e, const Ring& ring) {
  std::string s;
  if (e.free > 0) {
    s = ring.p == 0 ? "Z" : "F";
    if (e.free > 1) s += "^" + std::to_string(e.free);
  }
  // equal divisors are grouped: Z2^2
  for (size_t i = 0; i < e.torsion.size();) {
    size_t k = i;
    while (k < e.torsion.size() && e.torsion[k] == e.torsion[i]) ++k;
    if (!s.empty()) s += "+";
    s += "Z" + std::to_string(e.torsion[i]);
    if (k - i > 1) s += "^" + std::to_string(k - i);
    i = k;
  }
  return s;
}

}  // namespace

std::string homology_grid(const HomologyTable& t) {
  if (t.entries.empty()) return "(zero)\n";
  int imin = INT32_MAX, imax = INT32_MIN, jmin = INT32_MAX, jmax = INT32_MIN;
  for (const auto& [k, e] : t.entries) {
    imin = std::min(imin, k.first);
    imax = std::max(imax, k.first);
    jmin = std::min(jmin, k.second);
    jmax = std::max(jmax, k.second);
  }
  size_t width = 4;
  for (const auto& [k, e] : t.entries) width = std::max(width, cell_text(e, t.ring).size() + 1);
  std::ostringstream o;
  auto pad = [&](const std::string& s) { o << std::string(width - std::min(width, s.size()), ' ') << s; };
  pad("j\\i");
  for (int i = imin; i <= imax; ++i) pad(std::to_string(i));
  o << '\n';
  // quantum degrees of one link share a parity; step by 2 when they do
  int step = 1;
  bool same_parity = true;
  for (const auto& [k, e] : t.entries) same_parity &= ((k.second - jmin) % 2 == 0);
  if (same_parity) step = 2;
  for (int j = jmax; j >= jmin; j -= step) {
    pad(std::to_string(j));
    for (int i = imin; i <= imax; ++i) {
      auto it = t.entries.find({i, j});
      pad(it == t.entries.end() ? "." : cell_text(it->second, t.ring));
    }
    o << '\n';
  }
  return o.str();
}

std::map<int, int64_t> euler_characteristic(const HomologyTable& t) {
  std::map<int, int64_t> chi;
  for (const auto& [k, e] : t.entries) chi[k.second] += (k.first % 2 == 0 ? 1 : -1) * e.free;
  for (auto it = chi.begin(); it != chi.end();) it = it->second == 0 ? chi.erase(it) : std::next(it);
  return chi;
}

}  // namespace kvm
