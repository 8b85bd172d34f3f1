#include "torus.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "matching.hpp"

namespace kvm {

std::string Quarter::str() const {
  int64_t num = v, den = 4;
  const int64_t g = std::gcd(num < 0 ? -num : num, den);
  num /= g;
  den /= g;
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

const char* pattern_name(Pattern p) {
  switch (p) {
    case Pattern::A: return "A";
    case Pattern::B: return "B";
    case Pattern::C: return "C";
  }
  return "?";
}

Pattern parse_pattern(std::string_view s) {
  if (s == "A" || s == "a") return Pattern::A;
  if (s == "B" || s == "b") return Pattern::B;
  if (s == "C" || s == "c") return Pattern::C;
  throw Error(ErrorCode::ParseError, "unknown pattern '" + std::string(s) + "' (expected A, B or C)");
}

namespace {

const Word kBlockA = word_from_string("111");
const Word kBlockB = word_from_string("1010110b00110b");
const Word kBlockC = word_from_string("010b0b01");

Word repeat(const Word& w, int k) {
  Word out;
  for (int i = 0; i < k; ++i) out += w;
  return out;
}

}  // namespace

const Word& pattern_word(Pattern p) {
  static const Word a = repeat(kBlockA, 4), b = kBlockB, c = repeat(kBlockC, 2);
  switch (p) {
    case Pattern::A: return a;
    case Pattern::B: return b;
    case Pattern::C: return c;
  }
  return a;
}

std::pair<int, int> pattern_shift(Pattern p) {
  switch (p) {
    case Pattern::A: return {0, -12};
    case Pattern::B: return {-6, -20};
    case Pattern::C: return {-8, -24};
  }
  return {0, 0};
}

TValues t_values(int n, int h, int q) {
  // 4·t for each function, all integers
  return {Quarter{-2LL * n + 2LL * h - q - 4}, Quarter{12LL * n - 6LL * h + 4LL * q - 10},
          Quarter{-9LL * n + 4LL * h - 3LL * q - 1}};
}

TValues t_values(const Word& w) {
  if (w.size() % 3 != 0) throw Error(ErrorCode::ShapeMismatch, "torus cell length must be a multiple of 3");
  const int n = static_cast<int>(w.size() / 3);
  const Grading g = gradings(torus_braid(4, -n), w);
  return t_values(n, g.h, g.q);
}

Quarter t_value(const TValues& t, Pattern p) {
  switch (p) {
    case Pattern::A: return t.tA;
    case Pattern::B: return t.tB;
    case Pattern::C: return t.tC;
  }
  return {};
}

namespace {

using WordSet = std::set<Word>;

WordSet iterate(const WordSet& in, const Word& block, size_t max_len) {
  WordSet out;
  for (Word a : in) {
    while (a.size() <= max_len) {
      out.insert(a);
      a += block;
    }
  }
  return out;
}

WordSet append_each(const WordSet& in, const std::vector<std::string>& suffixes, size_t max_len) {
  WordSet out;
  for (const Word& a : in)
    for (const auto& s : suffixes) {
      Word w = a + word_from_string(s);
      if (w.size() <= max_len) out.insert(std::move(w));
    }
  return out;
}

}  // namespace

std::vector<std::set<Word>> generate_W_upto(int n_max) {
  const size_t L = 3 * static_cast<size_t>(std::max(n_max, 0));
  auto IA = [&](const WordSet& s) { return iterate(s, kBlockA, L); };
  auto IB = [&](const WordSet& s) { return iterate(s, kBlockB, L); };
  auto IC = [&](const WordSet& s) { return iterate(s, kBlockC, L); };
  auto g1 = [&](const WordSet& s) { return append_each(s, {"000", "001", "010", "011"}, L); };
  auto g2 = [&](const WordSet& s) { return append_each(s, {"", "100", "110", "000110b"}, L); };
  auto g3 = [&](const WordSet& s) { return append_each(s, {"100001", "110001", "000110b001"}, L); };
  auto g4 = [&](const WordSet& s) {
    return append_each(s, {"", "101", "101010", "101011", "1010110b00", "1010110b01", "1010110b10", "1010110b11"}, L);
  };
  auto g5 = [&](const WordSet& s) { return append_each(s, {"1010100b01", "1010110b00110b001"}, L); };
  auto g6 = [&](const WordSet& s) { return append_each(s, {"", "010b"}, L); };

  const WordSet n2 = IA({Word{}});
  const WordSet n6 = IB(g2(n2));
  std::vector<WordSet> chains = {g1(n2), g4(n6), g6(IC(g5(n6))), g6(IC(g3(n2)))};

  std::vector<std::set<Word>> by_n(n_max + 1);
  for (const auto& c : chains)
    for (const Word& w : c)
      if (w.size() % 3 == 0) by_n[w.size() / 3].insert(w);
  return by_n;
}

std::set<Word> generate_W(int n) {
  if (n < 0) return {};
  return std::move(generate_W_upto(n)[n]);
}

int count_disjoint(const Word& w, const Word& sub) {
  int count = 0;
  for (size_t pos = w.find(sub); pos != Word::npos; pos = w.find(sub, pos + sub.size())) ++count;
  return count;
}

Word gamma(const Word& w, Pattern p) {
  const Word& s = pattern_word(p);
  const size_t pos = w.find(s);
  if (pos == Word::npos)
    throw Error(ErrorCode::PatternAbsent, std::string("pattern ") + pattern_name(p) + " does not occur in " + word_to_string(w));
  Word out = w;
  out.insert(pos, s);
  return out;
}

std::string report_json(const CheckReport& r) {
  nlohmann::json j;
  j["check"] = r.check;
  j["n-range"] = {r.n_from, r.n_to};
  j["checked_count"] = r.checked;
  if (r.nonzero) j["nonzero_count"] = r.nonzero;
  if (r.conjecture) j["conjecture"] = true;
  j["counterexamples"] = r.counterexamples;
  if (r.failures_dropped) j["counterexamples_dropped"] = r.failures_dropped;
  j["ok"] = r.ok();
  return j.dump();
}

std::string reports_json(const std::vector<CheckReport>& rs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rs) arr.push_back(nlohmann::json::parse(report_json(r)));
  return arr.dump(2);
}

std::set<Word> unmatched_torus(int n) {
  auto u = unmatched_greedy(torus_braid(4, -n));
  return {u.begin(), u.end()};
}

CheckReport verify_W_equals_U(int n_max) {
  CheckReport r("W = U", 0, n_max);
  const auto W = generate_W_upto(n_max);
  for (int n = 0; n <= n_max; ++n) {
    const auto U = unmatched_torus(n);
    r.checked += U.size();
    for (const Word& w : U)
      if (!W[n].count(w)) r.fail("n=" + std::to_string(n) + ": unmatched " + word_to_string(w) + " not in W");
    for (const Word& w : W[n])
      if (!U.count(w)) r.fail("n=" + std::to_string(n) + ": " + word_to_string(w) + " in W but matched");
  }
  return r;
}

CheckReport verify_bijection(int n, Pattern p, const std::set<Word>& un, const std::set<Word>& un4) {
  CheckReport r(std::string("bijection ") + pattern_name(p), n, n + 4);
  const auto P = torus_braid(4, -n), P4 = torus_braid(4, -n - 4);
  const Quarter one = Quarter::from_int(1), two = Quarter::from_int(2);
  const auto [dh, dq] = pattern_shift(p);

  std::set<Word> images;
  for (const Word& w : un) {
    if (t_value(t_values(w), p) < one) continue;
    ++r.checked;
    const std::string ws = word_to_string(w);
    if (w.find(pattern_word(p)) == Word::npos) {
      r.fail(ws + ": t >= 1 but the pattern is absent");
      continue;
    }
    const Word v = gamma(w, p);
    const std::string vs = word_to_string(v);
    if (!un4.count(v)) r.fail(ws + " -> " + vs + ": image is not unmatched");
    if (t_value(t_values(v), p) < two) r.fail(ws + " -> " + vs + ": image has t < 2");
    const Grading g = gradings(P, w), g4 = gradings(P4, v);
    if (g4.h != g.h + dh || g4.q != g.q + dq) r.fail(ws + " -> " + vs + ": grading shift differs");
    if (scan(P, w).arc_partner != scan(P4, v).arc_partner) r.fail(ws + " -> " + vs + ": connectivity differs");
    if (!images.insert(v).second) r.fail(vs + ": hit twice");
  }
  for (const Word& v : un4)
    if (t_value(t_values(v), p) >= two && !images.count(v)) r.fail(word_to_string(v) + ": not in the image");
  return r;
}

CheckReport verify_bijection(int n, Pattern p) {
  return verify_bijection(n, p, unmatched_torus(n), unmatched_torus(n + 4));
}

std::vector<CheckReport> check_base_lemmas(const BaseLemmaOptions& opts) {
  const int n_formal = std::max({opts.n_max_order, opts.n_max_cover, opts.formal_words ? opts.n_max_t : 0});
  const auto W = generate_W_upto(n_formal);

  CheckReport bound("tA, tC >= -3/2", 0, opts.n_max_t);
  CheckReport copies("t >= m implies m disjoint copies", 0, opts.n_max_t);
  CheckReport shift("t shifts by delta under gamma", 0, opts.n_max_t);
  const Quarter floor_t = Quarter{-6};
  for (int n = 0; n <= opts.n_max_t; ++n) {
    const std::set<Word> U = opts.formal_words ? W[n] : unmatched_torus(n);
    for (const Word& w : U) {
      const TValues t = t_values(w);
      const std::string ws = word_to_string(w);
      ++bound.checked;
      if (t.tA < floor_t || t.tC < floor_t) bound.fail(ws + ": tA=" + t.tA.str() + " tC=" + t.tC.str());
      for (Pattern p : kPatterns) {
        const int64_t m = t_value(t, p).floor();
        const int c = count_disjoint(w, pattern_word(p));
        ++copies.checked;
        if (m >= 1 && c < m)
          copies.fail(ws + ": t" + pattern_name(p) + "=" + t_value(t, p).str() + " but " + std::to_string(c) + " copies");
        if (c == 0) continue;
        const TValues tg = t_values(gamma(w, p));
        for (Pattern p2 : kPatterns) {
          ++shift.checked;
          const int64_t expect = t_value(t, p2).v + (p == p2 ? 4 : 0);
          if (t_value(tg, p2).v != expect)
            shift.fail(ws + ": gamma_" + pattern_name(p) + " moves t" + pattern_name(p2) + " from " +
                       t_value(t, p2).str() + " to " + t_value(tg, p2).str());
        }
      }
    }
  }

  CheckReport cover("squared pattern from n = 24 on", 0, opts.n_max_cover);
  int longest_uncovered = -1;
  for (int n = 0; n <= opts.n_max_cover; ++n)
    for (const Word& w : W[n]) {
      bool has = false;
      for (Pattern p : kPatterns) has = has || w.find(pattern_word(p) + pattern_word(p)) != Word::npos;
      if (n >= 24) ++cover.checked;
      if (has) continue;
      longest_uncovered = std::max(longest_uncovered, n);
      if (n >= 24) cover.fail(word_to_string(w) + ": no squared pattern");
    }
  if (opts.n_max_cover >= 23 && longest_uncovered != 23)
    cover.fail("longest word without a squared pattern has n = " + std::to_string(longest_uncovered) + ", expected 23");

  CheckReport order("h(a)+1 = h(b), o(a) <= o(b) implies q(b) <= q(a)+3", 0, opts.n_max_order);
  for (int n = 0; n <= opts.n_max_order; ++n) {
    const auto P = torus_braid(4, -n);
    // per h: (o, q) of every cell
    std::map<int, std::vector<std::pair<int, int>>> by_h;
    std::map<int, std::vector<std::string>> names;
    for (const Word& w : W[n]) {
      const Grading g = gradings(P, w);
      int o = 0;
      while (o < static_cast<int>(w.size()) && static_cast<uint8_t>(w[o]) == Plain1) ++o;
      by_h[g.h].push_back({o, g.q});
      names[g.h].push_back(word_to_string(w));
    }
    for (const auto& [h, as] : by_h) {
      auto it = by_h.find(h + 1);
      if (it == by_h.end()) continue;
      for (size_t x = 0; x < as.size(); ++x)
        for (size_t y = 0; y < it->second.size(); ++y) {
          ++order.checked;
          const auto [oa, qa] = as[x];
          const auto [ob, qb] = it->second[y];
          if (oa <= ob && qb > qa + 3) order.fail("n=" + std::to_string(n) + ": " + names[h][x] + " -> " + names[h + 1][y]);
        }
    }
  }
  return {bound, copies, shift, cover, order};
}

const char* recursion_name(Recursion r) {
  switch (r) {
    case Recursion::A: return "A";
    case Recursion::B: return "B";
    case Recursion::C: return "C";
  }
  return "?";
}

bool in_recursion_region(Recursion r, int n, int i, int j) {
  switch (r) {
    case Recursion::A: return -2 * n + 2 * i - j >= 14;
    case Recursion::C: return -9 * n + 4 * i - 3 * j >= 41;
    // No theorem here. By analogy with A and C the region asks tB(n, i, j) to
    // exceed the cell-level threshold by the same margin as A: tB ≥ 5/2.
    case Recursion::B: return t_values(n, i, j).tB >= Quarter{10};
  }
  return false;
}

CheckReport verify_recursion(int n, Recursion which, const HomologyTable& kh_n, const HomologyTable& kh_n4) {
  CheckReport r(std::string("recursion ") + recursion_name(which) + (kh_n.reduced ? " (reduced)" : "") + " over " +
                         kh_n.ring.name(), n, n + 4, which == Recursion::B);
  const Pattern p = which == Recursion::A ? Pattern::A : which == Recursion::B ? Pattern::B : Pattern::C;
  const auto [dh, dq] = pattern_shift(p);
  std::set<std::pair<int, int>> cand;
  for (const auto& [k, e] : kh_n.entries) cand.insert(k);
  for (const auto& [k, e] : kh_n4.entries) cand.insert({k.first - dh, k.second - dq});
  const HomologyEntry zero;
  for (const auto& [i, j] : cand) {
    if (!in_recursion_region(which, n, i, j)) continue;
    auto a = kh_n.entries.find({i, j});
    auto b = kh_n4.entries.find({i + dh, j + dq});
    const HomologyEntry& ea = a == kh_n.entries.end() ? zero : a->second;
    const HomologyEntry& eb = b == kh_n4.entries.end() ? zero : b->second;
    ++r.checked;
    if (!(ea == zero) || !(eb == zero)) ++r.nonzero;
    if (!(ea == eb))
      r.fail("(" + std::to_string(i) + "," + std::to_string(j) + ") vs (" + std::to_string(i + dh) + "," +
             std::to_string(j + dq) + "): ranks " + std::to_string(ea.free) + " and " + std::to_string(eb.free));
  }
  return r;
}

CheckReport verify_vanishing(int n, const HomologyTable& kh_n) {
  CheckReport r(std::string("vanishing") + (kh_n.reduced ? " (reduced)" : "") + " over " + kh_n.ring.name(), n, n);
  for (const auto& [k, e] : kh_n.entries) {
    const auto [i, j] = k;
    ++r.checked;
    if (-2 * n + 2 * i - j < -6 || -9 * n + 4 * i - 3 * j < -17)
      r.fail("nonzero group at (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
  return r;
}

namespace {

// dense truncated series in t and q: c[a][b], a ≤ a_max, b ≤ 2a + 2
struct Dense {
  int a_max;
  std::vector<std::vector<int64_t>> c;
  explicit Dense(int a) : a_max(a), c(a + 1, std::vector<int64_t>(2 * a + 3, 0)) {}
  int b_max(int a) const { return 2 * a + 2; }
};

Dense times_monomial_sum(const Dense& x, const std::vector<std::pair<int, int>>& monomials) {
  Dense out(x.a_max);
  for (int a = 0; a <= x.a_max; ++a)
    for (int b = 0; b <= x.b_max(a); ++b) {
      if (!x.c[a][b]) continue;
      for (auto [da, db] : monomials) {
        const int a2 = a + da, b2 = b + db;
        if (a2 > x.a_max || b2 > out.b_max(a2)) continue;
        out.c[a2][b2] += x.c[a][b];
      }
    }
  return out;
}

// geometric series of t^da q^db, truncated at t-degree a_max or after `terms` terms
std::vector<std::pair<int, int>> geometric(int da, int db, int a_max, int terms = -1) {
  std::vector<std::pair<int, int>> m;
  for (int k = 0; k * da <= a_max && (terms < 0 || k < terms); ++k) m.push_back({k * da, k * db});
  return m;
}

Series2 gor(int a_max, int t6_terms) {
  if (a_max < 0) return {};
  Dense s(a_max);
  s.c[0][0] = 1;
  s = times_monomial_sum(s, {{0, 0}, {0, 2}});
  s = times_monomial_sum(s, {{0, 0}, {2, 4}});
  s = times_monomial_sum(s, {{0, 0}, {3, 6}});
  s = times_monomial_sum(s, {{0, 0}, {7, 10}});
  s = times_monomial_sum(s, geometric(4, 6, a_max));
  s = times_monomial_sum(s, geometric(6, 8, a_max, t6_terms));
  Series2 out;
  for (int a = 0; a <= a_max; ++a)
    for (int b = 0; b <= s.b_max(a); ++b)
      if (s.c[a][b]) out[{a, b}] = s.c[a][b];
  return out;
}

int64_t coeff(const Series2& s, int a, int b) {
  auto it = s.find({a, b});
  return it == s.end() ? 0 : it->second;
}

}  // namespace

Series2 gor_series_f2(int a_max) { return gor(a_max, -1); }
Series2 gor_series_truncated(int a_max) { return gor(a_max, 7); }

std::string series_csv(const Series2& s) {
  std::ostringstream os;
  os << "a,b,c_ab\n";
  for (const auto& [k, v] : s) os << k.first << "," << k.second << "," << v << "\n";
  return os.str();
}

std::vector<CheckReport> check_gor(int a_max) {
  const Series2 c = gor_series_f2(a_max), d = gor_series_truncated(a_max);
  CheckReport zero("c = d = 0 for b - 3a/2 >= 5", 0, a_max);
  CheckReport agree("c = d for b - 3a/2 >= -1", 0, a_max);
  CheckReport period("d(a,b) = d(a+4,b+6) for a >= 45", 45, a_max - 4);
  // every b a series term can reach
  for (int a = 0; a <= a_max; ++a)
    for (int b = 0; b <= 2 * a + 2; ++b) {
      const int twice = 2 * b - 3 * a;  // 2(b - 3a/2)
      if (twice >= 10) {
        ++zero.checked;
        if (coeff(c, a, b) || coeff(d, a, b)) zero.fail("(" + std::to_string(a) + "," + std::to_string(b) + ")");
      }
      if (twice >= -2) {
        ++agree.checked;
        if (coeff(c, a, b) != coeff(d, a, b)) agree.fail("(" + std::to_string(a) + "," + std::to_string(b) + ")");
      }
      if (a >= 45 && a + 4 <= a_max) {
        ++period.checked;
        if (coeff(d, a, b) != coeff(d, a + 4, b + 6))
          period.fail("(" + std::to_string(a) + "," + std::to_string(b) + ")");
      }
    }
  return {zero, agree, period};
}

}  // namespace kvm
