#include <random>

#include "doctest.h"
#include "torus.hpp"

using namespace kvm;

namespace {

// gradings of a cell of (σ₁σ₂σ₃)ⁿ counted by hand: every crossing is negative
std::pair<int, int> hand_gradings(const Word& w) {
  const int n = static_cast<int>(w.size() / 3);
  int ones = 0, blue = 0, red = 0;
  for (unsigned char t : w) {
    ones += token_base(t) == 1;
    blue += token_color(t) == Color::Blue;
    red += token_color(t) == Color::Red;
  }
  return {ones - 3 * n, ones - 6 * n + red - blue};
}

// largest set of pairwise disjoint occurrences, by dynamic programming over
// prefixes
int max_disjoint(const Word& w, const Word& s) {
  std::vector<int> best(w.size() + 1, 0);
  for (size_t i = 1; i <= w.size(); ++i) {
    best[i] = best[i - 1];
    if (i >= s.size() && w.compare(i - s.size(), s.size(), s) == 0) best[i] = std::max(best[i], best[i - s.size()] + 1);
  }
  return best[w.size()];
}

Word random_word(std::mt19937& rng, int len) {
  Word w;
  for (int i = 0; i < len; ++i) w.push_back(static_cast<char>(std::uniform_int_distribution<int>(0, 1)(rng) ? Plain1 : Plain0));
  return w;
}

}  // namespace

TEST_CASE("t-values") {
  for (int n = 0; n <= 12; ++n) {
    const Word w = word_from_string(std::string(3 * n, '1'));
    const TValues t = t_values(w);
    CHECK(t.tA == Quarter{n - 4});  // n/4 - 1
  }
  CHECK(t_values(Word{}).tB.str() == "-5/2");
  CHECK(t_values(Word{}).tA.str() == "-1");
  CHECK(t_values(Word{}).tC.str() == "-1/4");
  CHECK(Quarter{-6}.floor() == -2);
  CHECK(Quarter{-4}.floor() == -1);
  CHECK(Quarter{7}.floor() == 1);
  CHECK_THROWS_AS(t_values(word_from_string("11")), Error);

  // the formulas against hand-counted gradings
  for (int n = 0; n <= 10; ++n)
    for (const Word& w : unmatched_torus(n)) {
      const auto [h, q] = hand_gradings(w);
      const TValues t = t_values(w);
      CHECK(t.tA.v == -2 * n + 2 * h - q - 4);
      CHECK(t.tB.v == 12 * n - 6 * h + 4 * q - 10);
      CHECK(t.tC.v == -9 * n + 4 * h - 3 * q - 1);
    }
}

TEST_CASE("formal words") {
  CHECK(generate_W(0) == std::set<Word>{Word{}});
  std::set<Word> binary;
  for (int b = 0; b < 8; ++b) {
    Word w;
    for (int k = 2; k >= 0; --k) w.push_back(static_cast<char>((b >> k) & 1 ? Plain1 : Plain0));
    binary.insert(w);
  }
  CHECK(generate_W(1) == binary);

  const auto W = generate_W_upto(10);
  for (int n = 0; n <= 10; ++n) {
    CAPTURE(n);
    CHECK(W[n] == generate_W(n));
    CHECK(W[n] == unmatched_torus(n));
  }
  CHECK(verify_W_equals_U(6).ok());
}

TEST_CASE("pattern duplication") {
  const Word a = pattern_word(Pattern::A);
  CHECK(a == word_from_string("111111111111"));
  for (Pattern p : kPatterns) CHECK(pattern_word(p).size() == 12);
  const Word x = word_from_string("010");
  CHECK(gamma(a + x, Pattern::A) == a + a + x);
  CHECK_THROWS_AS(gamma(x, Pattern::A), Error);
  try {
    gamma(x, Pattern::C);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PatternAbsent);
  }

  std::mt19937 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const Word w = random_word(rng, 6 + trial % 40);
    const Word s = random_word(rng, 1 + trial % 4);
    CHECK(count_disjoint(w, s) == max_disjoint(w, s));
  }

  // γ moves the hand-counted gradings by the stated shift and t_* by one
  for (int n = 8; n <= 16; ++n)
    for (const Word& w : generate_W(n))
      for (Pattern p : kPatterns) {
        if (w.find(pattern_word(p)) == Word::npos) continue;
        const Word v = gamma(w, p);
        const auto [h, q] = hand_gradings(w);
        const auto [h4, q4] = hand_gradings(v);
        CHECK(std::pair{h4 - h, q4 - q} == pattern_shift(p));
        for (Pattern p2 : kPatterns)
          CHECK(t_value(t_values(v), p2).v == t_value(t_values(w), p2).v + (p == p2 ? 4 : 0));
      }
}

TEST_CASE("gamma is a bijection between the t-regions") {
  size_t nonempty = 0;
  for (int n = 0; n <= 14; ++n) {
    const auto un = unmatched_torus(n), un4 = unmatched_torus(n + 4);
    for (Pattern p : kPatterns) {
      const auto r = verify_bijection(n, p, un, un4);
      CAPTURE(report_json(r));
      CHECK(r.ok());
      nonempty += r.checked > 0;
    }
  }
  CHECK(nonempty >= 10);
  const auto r = verify_bijection(12, Pattern::C);
  CHECK(r.ok());
  CHECK(r.checked == 12);
}

TEST_CASE("base cases on a reduced range") {
  BaseLemmaOptions o;
  o.n_max_t = 14;
  o.n_max_order = 24;
  o.n_max_cover = 26;
  for (const auto& r : check_base_lemmas(o)) {
    CAPTURE(report_json(r));
    CHECK(r.ok());
    CHECK(r.checked > 0);
  }
  // the formal words give the same verdict
  o.formal_words = true;
  for (const auto& r : check_base_lemmas(o)) CHECK(r.ok());
}

TEST_CASE("recursion and vanishing on computed tables") {
  std::vector<HomologyTable> t;
  for (int n = 0; n <= 9; ++n) t.push_back(khovanov(torus_braid(4, -n)).table);
  for (int n = 0; n <= 9; ++n) {
    CHECK(verify_vanishing(n, t[n]).ok());
    CHECK(verify_vanishing(n, t[n]).checked == t[n].entries.size());
  }
  // for small n the regions miss the support
  for (int n = 3; n <= 5; ++n)
    for (Recursion r : {Recursion::A, Recursion::C}) {
      const auto rep = verify_recursion(n, r, t[n], t[n + 4]);
      CHECK(rep.ok());
      CHECK(rep.nonzero == 0);
    }
  const auto b = verify_recursion(5, Recursion::B, t[5], t[9]);
  CHECK(b.conjecture);
  CHECK(b.ok());

  // the A region meets the support from n = 16 on
  const auto t16 = khovanov(torus_braid(4, -16)).table, t20 = khovanov(torus_braid(4, -20)).table;
  const auto a = verify_recursion(16, Recursion::A, t16, t20);
  CHECK(a.ok());
  CHECK(a.nonzero == 4);

  // a perturbed table is caught
  HomologyTable bad = t20;
  for (auto& [k, e] : bad.entries)
    if (in_recursion_region(Recursion::A, 16, k.first, k.second + 12)) {
      e.free += 1;
      break;
    }
  CHECK_FALSE(verify_recursion(16, Recursion::A, t16, bad).ok());
  HomologyTable far = t[4];
  far.entries[{0, 20}] = {1, {}};
  CHECK_FALSE(verify_vanishing(4, far).ok());
}

TEST_CASE("GOR series") {
  const int a_max = 30;
  const Series2 c = gor_series_f2(a_max);
  CHECK(c.at({0, 0}) == 1);
  CHECK(c.at({0, 2}) == 1);

  // expand by summing over all exponent choices
  Series2 brute;
  const std::pair<int, int> num[] = {{0, 2}, {2, 4}, {3, 6}, {7, 10}};
  for (int mask = 0; mask < 16; ++mask)
    for (int k4 = 0; 4 * k4 <= a_max; ++k4)
      for (int k6 = 0; 4 * k4 + 6 * k6 <= a_max; ++k6) {
        int a = 4 * k4 + 6 * k6, b = 6 * k4 + 8 * k6;
        for (int i = 0; i < 4; ++i)
          if (mask >> i & 1) a += num[i].first, b += num[i].second;
        if (a <= a_max) brute[{a, b}] += 1;
      }
  CHECK(c == brute);

  const Series2 d = gor_series_truncated(a_max);
  for (const auto& [k, v] : d) CHECK(v <= c.at(k));
  for (const auto& r : check_gor(60)) {
    CAPTURE(report_json(r));
    CHECK(r.ok());
    CHECK(r.checked > 0);
  }
  CHECK(series_csv(gor_series_f2(0)) == "a,b,c_ab\n0,0,1\n0,2,1\n");
}
