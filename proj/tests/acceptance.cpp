// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 when any
// criterion fails.
//
// usage: kvm_acceptance <data dir>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "homology.hpp"
#include "matching.hpp"
#include "oracle.hpp"
#include "torus.hpp"

using namespace kvm;

namespace {

int failures = 0;

void line(int n, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", n, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// a criterion that throws is a failure with the message as detail
void run(int n, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    line(n, false, std::string("exception: ") + e.what());
  }
}

std::vector<MorsePresentation> random_corpus() {
  std::mt19937 rng(20240611);
  std::vector<MorsePresentation> out;
  for (int k = 0; k < 50; ++k) out.push_back(oracle::random_braid(rng, 5, 10));
  return out;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion1(const std::vector<MorsePresentation>& corpus) {
  const auto t0 = std::chrono::steady_clock::now();
  size_t compared = 0, fallbacks = 0;
  std::string bad;
  for (const auto& p : corpus)
    for (Ring ring : {Ring{0}, Ring{2}}) {
      KhovanovOptions o;
      o.ring = ring;
      o.strategy = Strategy::FullCube;
      o.mirror_positive = false;
      const HomologyTable full = khovanov(p, o).table;
      o.mirror_positive = true;
      o.strategy = Strategy::Lex;
      const HomologyTable lex = khovanov(p, o).table;
      o.strategy = Strategy::Greedy;
      const KhovanovResult gr = khovanov(p, o);
      fallbacks += gr.fallback;
      compared += 2;
      if ((!(full == lex) || !(full == gr.table)) && bad.empty())
        bad = canonical_link_string(p) + " over " + ring.name();
    }
  const double secs = seconds_since(t0);
  std::string detail = fmt("%zu comparisons on 50 braids over Z and F2 in %.1fs", compared, secs);
  if (fallbacks) detail += fmt(", %zu greedy runs fell back to lex", fallbacks);
  if (!bad.empty()) detail += ", mismatch on " + bad;
  if (secs >= 120) detail += ", over the 2 minute budget";
  line(1, bad.empty() && secs < 120, detail);
}

void criterion2(const std::vector<MorsePresentation>& corpus) {
  // The lexicographic complex of T(4,-n) has 1.5 million cells at n = 9, so
  // the torus braids get it only up to n = 6. The homology pipeline runs the
  // greedy matching, which is checked on all of them.
  struct Item {
    MorsePresentation p;
    bool lex;
  };
  std::vector<Item> all;
  for (const auto& p : corpus) all.push_back({p, true});
  for (int n = 0; n <= 10; ++n) all.push_back({torus_braid(4, -n), n <= 6});
  size_t matchings = 0, complexes = 0, pairs = 0;
  std::vector<std::string> bad;
  for (const auto& [p, with_lex] : all)
    for (MatchingKind k : {MatchingKind::Lex, MatchingKind::Greedy}) {
      if (k == MatchingKind::Lex && !with_lex) continue;
      const Matching m = Matching::build(p, k);
      ++matchings;
      const VerifyReport v = verify_matching(m);
      if (!v.ok()) {
        bad.push_back(fmt("%s matching on %s: %s", matching_kind_name(k), canonical_link_string(p).c_str(),
                          violation_name(v.kind)));
        continue;
      }
      try {
        MorseOptions mo;
        mo.check_d2 = false;
        const MorseComplex c = build_morse_complex(m, mo);
        pairs += check_d_squared(c);
        for (bool reduced : {false, true}) check_d_squared(apply_tqft(c, reduced));
        ++complexes;
      } catch (const std::exception& e) {
        bad.push_back(canonical_link_string(p) + ": " + e.what());
      }
    }
  std::string detail = fmt("%zu matchings verified acyclic, %zu Morse complexes with d^2 = 0 (%zu entry pairs); "
                           "lex on T(4,-n) only for n <= 6",
                           matchings - bad.size(), complexes, pairs);
  for (const auto& b : bad) detail += "; " + b;
  line(2, bad.empty(), detail);
}

void criterion3() {
  const MorsePresentation p = parse_tangle("bottom: 3\nx 1\nx 2\ncap 1\n");
  const MorseComplex c = build_morse_complex(Matching::build(p, MatchingKind::Greedy));
  std::string cells;
  for (const auto& x : c.cells) cells += (cells.empty() ? "" : " ") + word_to_string(x.word);
  const bool pass = c.cells.size() == 1 && word_to_string(c.cells[0].word) == "10." && c.entries.empty();
  line(3, pass, fmt("greedy complex cells {%s}, %zu differential entries", cells.c_str(), c.entries.size()));
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const Matching m = Matching::build(parse_braid_word("-1 -4 3 2 3 3 2 2 -1 -4", 5), MatchingKind::Greedy);
  const CycleSearch s = find_cycles(m, 12);
  std::string lengths;
  for (const auto& c : s.cycles) lengths += (lengths.empty() ? "" : ",") + std::to_string(c.length());
  const bool pass = !s.budget_exceeded && s.cycles.size() == 1 && s.cycles[0].length() == 12;
  line(4, pass,
       fmt("%zu cycles of length <= 12 (lengths [%s])%s in %.1fs", s.cycles.size(), lengths.c_str(),
           s.budget_exceeded ? ", search budget exceeded" : "", seconds_since(t0)));
}

void criterion5() {
  using E = std::map<std::pair<int, int>, HomologyEntry>;
  struct Case {
    int n, from;
    E want;
  };
  const Case cases[] = {
      {5, 8, {{{8, 24}, {1, {}}}, {{9, 26}, {1, {}}}, {{10, 28}, {0, {2}}}}},
      {7, 12, {{{12, 36}, {1, {}}}, {{12, 38}, {1, {}}}, {{13, 38}, {1, {}}}, {{14, 40}, {0, {2}}}}},
      {9, 16, {{{16, 48}, {1, {2}}}, {{16, 50}, {1, {}}}, {{17, 50}, {1, {}}}, {{18, 52}, {0, {2}}}}},
  };
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;
  for (const auto& c : cases) {
    KhovanovOptions o;
    o.reduced = true;
    o.allow_fallback = false;
    const KhovanovResult r = khovanov(torus_braid(4, c.n), o);
    E got;
    for (const auto& [k, e] : r.table.entries)
      if (k.first >= c.from) got[k] = e;
    const bool ok = got == c.want && r.mirrored;
    pass = pass && ok;
    detail += fmt("%sT(4,%d) i>=%d %s", detail.empty() ? "" : ", ", c.n, c.from, ok ? "matches" : "differs");
  }
  line(5, pass, detail + fmt(" (reduced, via the mirror, %.1fs)", seconds_since(t0)));
}

void criterion6() {
  const CheckReport r = verify_W_equals_U(12);
  line(6, r.ok(), fmt("W_n = U_n for n = 0..12, %zu words", r.checked));
}

void criterion7() {
  const auto reps = check_base_lemmas();
  bool pass = true;
  std::string detail;
  for (const auto& r : reps) {
    pass = pass && r.ok() && r.checked > 0;
    detail += fmt("%s%s n<=%d: %zu checked%s", detail.empty() ? "" : "; ", r.check.c_str(), r.n_to, r.checked,
                  r.ok() ? "" : ", counterexample");
  }
  line(7, pass, detail);
}

void criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<HomologyTable> z, f2;
  for (int n = 0; n <= 9; ++n) {
    KhovanovOptions o;
    z.push_back(khovanov(torus_braid(4, -n), o).table);
    o.ring = Ring{2};
    f2.push_back(khovanov(torus_braid(4, -n), o).table);
  }
  bool ok = true;
  size_t nonzero = 0, compared = 0, vanishing = 0;
  for (int n = 3; n <= 5; ++n)
    for (Recursion w : {Recursion::A, Recursion::C}) {
      const CheckReport r = verify_recursion(n, w, z[n], z[n + 4]);
      ok = ok && r.ok();
      nonzero += r.nonzero;
      compared += r.checked;
    }
  for (int n = 0; n <= 9; ++n)
    for (const HomologyTable* t : {&z[n], &f2[n]}) {
      const CheckReport r = verify_vanishing(n, *t);
      ok = ok && r.ok();
      vanishing += r.checked;
    }
  std::string detail = fmt(
      "pairs n = 3,4,5 against n + 4: %zu comparisons, %zu non-vacuous; vanishing holds on %zu groups of 20 tables "
      "(%.1fs)",
      compared, nonzero, vanishing, seconds_since(t0));

  // The stated pairs never reach the regions, so the line also reports the
  // first pair that does.
  const auto t1 = std::chrono::steady_clock::now();
  const CheckReport ext = verify_recursion(16, Recursion::A, khovanov(torus_braid(4, -16)).table,
                                           khovanov(torus_braid(4, -20)).table);
  ok = ok && ext.ok();
  detail += fmt("; outside the stated pairs, A at n = 16 vs 20: %zu non-vacuous, %s (%.1fs)", ext.nonzero,
                ext.ok() ? "equal" : "counterexample", seconds_since(t1));
  line(8, ok && nonzero > 0, detail);
}

void criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  for (const auto& r : check_gor(60)) {
    pass = pass && r.ok() && r.checked > 0;
    detail += fmt("%s%s: %zu checked%s", detail.empty() ? "" : "; ", r.check.c_str(), r.checked,
                  r.ok() ? "" : ", counterexample");
  }
  const double secs = seconds_since(t0);
  line(9, pass && secs < 10, detail + fmt(" (a <= 60, %.2fs)", secs));
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

void criterion10(const std::string& data_dir) {
  std::ifstream in(data_dir + "/alternating_braids.csv");
  if (!in) {
    line(10, false, "cannot read " + data_dir + "/alternating_braids.csv");
    return;
  }
  std::string row;
  std::getline(in, row);
  size_t rows = 0, supplied = 0, minimal = 0, ordered = 0;
  std::vector<std::string> bad;
  while (std::getline(in, row)) {
    if (row.empty()) continue;
    const auto f = split_csv(row);
    if (f.size() != 4) {
      bad.push_back("malformed row " + row);
      continue;
    }
    ++rows;
    const MorsePresentation p = parse_braid_word(f[2], std::stoi(f[1]));
    std::vector<Word> cur{Word{}};
    for (int l = 1; l <= p.num_layers(); ++l) cur = expand(p, cur);
    const size_t full = cur.size();
    const size_t lex = Matching::build(p, MatchingKind::Lex).unmatched().size();
    const size_t gr = Matching::build(p, MatchingKind::Greedy).unmatched().size();
    if (gr <= lex && lex <= full) ++ordered;
    else bad.push_back(fmt("%s sizes %zu/%zu/%zu out of order", f[0].c_str(), gr, lex, full));
    if (f[3].empty()) continue;
    ++supplied;
    if (lex == std::stoul(f[3])) ++minimal;
    else bad.push_back(fmt("%s lex size %zu, minimal %s", f[0].c_str(), lex, f[3].c_str()));
  }
  std::string detail = fmt("%zu alternating rows: greedy <= lex <= full on %zu; lex minimal on %zu of %zu rows with "
                           "a supplied minimal size",
                           rows, ordered, minimal, supplied);
  if (supplied < rows) detail += fmt("; %zu rows have no externally supplied minimal size", rows - supplied);
  for (const auto& b : bad) detail += "; " + b;
  line(10, bad.empty() && rows > 0 && supplied == rows, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string data_dir = argc > 1 ? argv[1] : "data";
  const auto corpus = random_corpus();
  run(1, [&] { criterion1(corpus); });
  run(2, [&] { criterion2(corpus); });
  run(3, criterion3);
  run(4, criterion4);
  run(5, criterion5);
  run(6, criterion6);
  run(7, criterion7);
  run(8, criterion8);
  run(9, criterion9);
  run(10, [&] { criterion10(data_dir); });
  std::printf("%d of 10 criteria failed\n", failures);
  return failures ? 1 : 0;
}
