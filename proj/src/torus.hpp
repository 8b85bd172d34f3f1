#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "homology.hpp"

// Word-level machinery for the negative 4-strand torus braids (σ₁σ₂σ₃)ⁿ: the
// t-functions, the formal word set W, the pattern duplication γ, and checks of
// the recursions and vanishing regions they predict.
namespace kvm {

// An exact rational with denominator dividing 4, stored as 4x.
struct Quarter {
  int64_t v = 0;
  static Quarter from_int(int64_t n) { return {4 * n}; }
  int64_t floor() const { return v >= 0 ? v / 4 : -((-v + 3) / 4); }
  std::string str() const;
  auto operator<=>(const Quarter&) const = default;
};

struct TValues {
  Quarter tA;
  Quarter tB;
  Quarter tC;
};

enum class Pattern { A, B, C };
const char* pattern_name(Pattern p);
Pattern parse_pattern(std::string_view s);
constexpr Pattern kPatterns[] = {Pattern::A, Pattern::B, Pattern::C};

// the length-12 block of a pattern: A = 1¹², B = 1010110b00110b, C = (010b0b01)²
const Word& pattern_word(Pattern p);
// (dh, dq) of γ: gradings of γ(w) in T(4,-n-4) minus those of w in T(4,-n)
std::pair<int, int> pattern_shift(Pattern p);

// t-values of a cell of (σ₁σ₂σ₃)ⁿ (negative crossings, |w| = 3n); n is read off
// the length.
TValues t_values(const Word& w);
TValues t_values(int n, int h, int q);
Quarter t_value(const TValues& t, Pattern p);

// the length-3n members of W
std::set<Word> generate_W(int n);
// all of W up to length 3·n_max, grouped by n
std::vector<std::set<Word>> generate_W_upto(int n_max);

// number of pairwise disjoint occurrences (leftmost greedy, which is maximal)
int count_disjoint(const Word& w, const Word& sub);
// γ: duplicate the first occurrence; PatternAbsent otherwise
Word gamma(const Word& w, Pattern p);

struct CheckReport {
  CheckReport(std::string name, int from, int to, bool conj = false)
      : check(std::move(name)), n_from(from), n_to(to), conjecture(conj) {}
  std::string check;
  int n_from = 0;
  int n_to = 0;
  size_t checked = 0;   // items examined
  size_t nonzero = 0;   // recursion checks: comparisons where a group is nonzero
  bool conjecture = false;
  std::vector<std::string> counterexamples;
  bool ok() const { return counterexamples.empty(); }
  void fail(std::string s) {
    if (counterexamples.size() < 50) counterexamples.push_back(std::move(s));
    else failures_dropped++;
  }
  size_t failures_dropped = 0;
};
std::string report_json(const CheckReport& r);
std::string reports_json(const std::vector<CheckReport>& rs);

// U_n: the unmatched cells of the greedy matching on torus_braid(4, -n)
std::set<Word> unmatched_torus(int n);

CheckReport verify_W_equals_U(int n_max);

// γ restricted to {w ∈ U_n : t ≥ 1} is a bijection onto {w ∈ U_{n+4} : t ≥ 2},
// shifts gradings by pattern_shift and keeps the boundary connectivity.
CheckReport verify_bijection(int n, Pattern p);
// same, with U_n and U_{n+4} supplied
CheckReport verify_bijection(int n, Pattern p, const std::set<Word>& un, const std::set<Word>& un4);

struct BaseLemmaOptions {
  int n_max_t = 23;       // lower bounds on tA, tC and the t ⇒ disjoint copies implication
  int n_max_order = 40;   // the h/o/q implication (the full range is 82)
  int n_max_cover = 30;   // coverage by squared patterns for 24 ≤ n
  bool formal_words = false;  // use W instead of U for the t-checks
};
// The implication on pairs is run on W (equal to U, see verify_W_equals_U).
std::vector<CheckReport> check_base_lemmas(const BaseLemmaOptions& opts = {});

enum class Recursion { A, B, C };
const char* recursion_name(Recursion r);
// True when (i, j) of T(4,-n) lies in the region where the recursion applies.
bool in_recursion_region(Recursion r, int n, int i, int j);

// Compares Kh^{i,j}(T(4,-n)) with the shifted Kh(T(4,-n-4)) over the region.
// B has no theorem behind it and is reported as a conjecture.
CheckReport verify_recursion(int n, Recursion which, const HomologyTable& kh_n, const HomologyTable& kh_n4);

// Kh^{i,j}(T(4,-n)) = 0 whenever -2n+2i-j < -6 or -9n+4i-3j < -17
CheckReport verify_vanishing(int n, const HomologyTable& kh_n);

// coefficient tables keyed by (a, b), zero coefficients omitted
using Series2 = std::map<std::pair<int, int>, int64_t>;
// P₄(t, q; F₂) = (1+q²)(1+t²q⁴)(1+t³q⁶)(1+t⁷q¹⁰) / ((1-t⁴q⁶)(1-t⁶q⁸)), t-degree ≤ a_max
Series2 gor_series_f2(int a_max);
// the same with (1-t⁶q⁸)⁻¹ truncated after (t⁶q⁸)⁶
Series2 gor_series_truncated(int a_max);
std::string series_csv(const Series2& s);

// c = 0 for b - 3a/2 ≥ 5; c = d for b - 3a/2 ≥ -1; d_{a,b} = d_{a+4,b+6} for a ≥ 45
std::vector<CheckReport> check_gor(int a_max);

}  // namespace kvm
