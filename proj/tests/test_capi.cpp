#include <cstring>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "kvm/kvm.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  kvm_string_free(s);
  return out;
}

struct Link {
  kvm_link* p = nullptr;
  ~Link() { kvm_link_free(p); }
};

struct Result {
  kvm_result* p = nullptr;
  ~Result() { kvm_result_free(p); }
};

const char* kGamma = "-1 -4 3 2 3 3 2 2 -1 -4";

}  // namespace

TEST_CASE("links and errors") {
  Link l;
  CHECK(kvm_link_from_braid("1 -2 1", 3, &l.p) == KVM_OK);
  CHECK(kvm_link_crossings(l.p) == 3);
  char* s = nullptr;
  REQUIRE(kvm_link_canonical(l.p, &s) == KVM_OK);
  CHECK(take(s) == "3:1 -2 1");

  Link bad;
  CHECK(kvm_link_from_braid("1 x", 3, &bad.p) == KVM_ERR_PARSE);
  CHECK(bad.p == nullptr);
  CHECK(std::strlen(kvm_last_error()) > 0);
  CHECK(kvm_link_from_braid("5", 3, &bad.p) != KVM_OK);
  CHECK(kvm_link_from_braid(nullptr, 3, &bad.p) == KVM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(kvm_status_name(KVM_ERR_MATCHING_NOT_ACYCLIC)) == "MatchingNotAcyclic");
  CHECK(std::string(kvm_status_name(KVM_OK)) == "Ok");

  // the serialized tangle reads back to the same presentation
  Link t;
  REQUIRE(kvm_link_from_torus(3, -2, &t.p) == KVM_OK);
  REQUIRE(kvm_link_serialize(t.p, &s) == KVM_OK);
  const std::string text = take(s);
  Link back;
  REQUIRE(kvm_link_from_tangle(text.c_str(), &back.p) == KVM_OK);
  REQUIRE(kvm_link_serialize(back.p, &s) == KVM_OK);
  CHECK(take(s) == text);

  kvm_link_free(nullptr);
  kvm_result_free(nullptr);
  kvm_string_free(nullptr);
}

TEST_CASE("homology through the C interface") {
  Link l;
  REQUIRE(kvm_link_from_torus(2, -3, &l.p) == KVM_OK);
  Result r;
  REQUIRE(kvm_homology(l.p, nullptr, &r.p) == KVM_OK);
  CHECK(kvm_result_fallback(r.p) == 0);

  // the left-handed trefoil, the table the unit tests derive by brute force
  std::map<std::pair<int, int>, std::pair<int, std::vector<int64_t>>> got;
  for (size_t k = 0; k < kvm_result_entry_count(r.p); ++k) {
    int i, j, f;
    int64_t tors[4];
    size_t nt;
    REQUIRE(kvm_result_entry(r.p, k, &i, &j, &f, tors, 4, &nt) == KVM_OK);
    got[{i, j}] = {f, std::vector<int64_t>(tors, tors + nt)};
  }
  const std::map<std::pair<int, int>, std::pair<int, std::vector<int64_t>>> want = {
      {{0, -1}, {1, {}}}, {{0, -3}, {1, {}}}, {{-2, -5}, {1, {}}}, {{-2, -7}, {0, {2}}}, {{-3, -9}, {1, {}}}};
  CHECK(got == want);
  CHECK(kvm_result_entry(r.p, 99, nullptr, nullptr, nullptr, nullptr, 0, nullptr) == KVM_ERR_INDEX_OUT_OF_RANGE);

  char* s = nullptr;
  REQUIRE(kvm_result_format(r.p, KVM_FORMAT_JSON, &s) == KVM_OK);
  const auto j = nlohmann::json::parse(take(s));
  CHECK(j["link"] == "2:-1 -1 -1");
  CHECK(j["ring"] == "Z");
  CHECK(j["strategy"] == "greedy");
  CHECK(j["fallback"] == false);
  CHECK(j["entries"].size() == 5);
  REQUIRE(kvm_result_format(r.p, KVM_FORMAT_CSV, &s) == KVM_OK);
  CHECK(take(s).rfind("i,j,free,torsion\n", 0) == 0);

  // F2, reduced: one-dimensional in three bidegrees
  kvm_homology_options o;
  kvm_homology_options_init(&o);
  o.ring = 2;
  o.reduced = 1;
  Result r2;
  REQUIRE(kvm_homology(l.p, &o, &r2.p) == KVM_OK);
  CHECK(kvm_result_entry_count(r2.p) == 3);

  o.ring = 4;
  Result r4;
  CHECK(kvm_homology(l.p, &o, &r4.p) != KVM_OK);
  o.ring = 0;
  o.strategy = static_cast<kvm_strategy>(7);
  CHECK(kvm_homology(l.p, &o, &r4.p) == KVM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("a cyclic greedy matching") {
  Link g;
  REQUIRE(kvm_link_from_braid(kGamma, 5, &g.p) == KVM_OK);
  kvm_homology_options o;
  kvm_homology_options_init(&o);
  o.allow_fallback = 0;
  Result r;
  CHECK(kvm_homology(g.p, &o, &r.p) == KVM_ERR_MATCHING_NOT_ACYCLIC);
  o.allow_fallback = 1;
  REQUIRE(kvm_homology(g.p, &o, &r.p) == KVM_OK);
  CHECK(kvm_result_fallback(r.p) == 1);

  char* s = nullptr;
  REQUIRE(kvm_match_report(g.p, KVM_MATCHING_GREEDY, 12, 0, &s) == KVM_OK);
  const auto j = nlohmann::json::parse(take(s));
  CHECK(j["acyclic"] == "no");
  REQUIRE(j["cycle_lengths"].size() == 1);
  CHECK(j["cycle_lengths"][0] == 12);

  kvm_sizes sz;
  REQUIRE(kvm_complex_sizes(g.p, &sz) == KVM_OK);
  CHECK(sz.greedy_acyclic == 0);
  CHECK(sz.greedy <= sz.lex);
  CHECK(sz.lex <= sz.full);
}

TEST_CASE("matching reports") {
  Link t;
  REQUIRE(kvm_link_from_torus(4, -1, &t.p) == KVM_OK);
  char* s = nullptr;
  REQUIRE(kvm_match_report(t.p, KVM_MATCHING_GREEDY, 0, 1, &s) == KVM_OK);
  const auto j = nlohmann::json::parse(take(s));
  CHECK(j["dim_kom"] == 8);
  CHECK(j["unmatched"].size() == 8);
  CHECK(j["acyclic"] == "yes");
  size_t per_degree = 0;
  for (const auto& d : j["dim_cob"]) per_degree += d["count"].get<size_t>();
  CHECK(per_degree == 8);
  for (const auto& e : j["edges"]) CHECK(e.get<std::string>().find(" => ") != std::string::npos);

  REQUIRE(kvm_cell_graph(t.p, KVM_MATCHING_GREEDY, &s) == KVM_OK);
  CHECK(take(s).rfind("digraph G {", 0) == 0);
}

TEST_CASE("verification entry points") {
  char* s = nullptr;
  int ok = 0;
  REQUIRE(kvm_verify("W=U", "{\"n_max\": 6}", &s, &ok) == KVM_OK);
  CHECK(ok == 1);
  auto j = nlohmann::json::parse(take(s));
  CHECK(j[0]["check"] == "W = U");
  CHECK(j[0]["n-range"][1] == 6);

  CHECK(kvm_verify("W=U", "{\"n_max\": 9, \"budget_n\": 4}", &s, &ok) == KVM_ERR_BUDGET_EXCEEDED);
  j = nlohmann::json::parse(take(s));
  CHECK(j[0]["n-range"][1] == 4);

  REQUIRE(kvm_verify("vanishing", "{\"n_max\": 4, \"ring\": \"F2\"}", &s, &ok) == KVM_OK);
  CHECK(ok == 1);
  CHECK(nlohmann::json::parse(take(s)).size() == 5);

  REQUIRE(kvm_verify("gor", "{\"a_max\": 20}", &s, &ok) == KVM_OK);
  CHECK(ok == 1);
  take(s);

  CHECK(kvm_verify("nonsense", nullptr, &s, &ok) == KVM_ERR_INVALID_ARGUMENT);
  CHECK(kvm_verify("W=U", "{not json", &s, &ok) == KVM_ERR_PARSE);

  REQUIRE(kvm_gor_csv(0, &s) == KVM_OK);
  CHECK(take(s) == "a,b,c_ab\n0,0,1\n0,2,1\n");
}

TEST_CASE("concurrent calls") {
  std::vector<std::string> out(6);
  std::vector<std::thread> ts;
  for (size_t k = 0; k < out.size(); ++k)
    ts.emplace_back([&, k] {
      kvm_link* l = nullptr;
      kvm_result* r = nullptr;
      char* s = nullptr;
      if (kvm_link_from_torus(3, -4, &l) == KVM_OK && kvm_homology(l, nullptr, &r) == KVM_OK &&
          kvm_result_format(r, KVM_FORMAT_JSON, &s) == KVM_OK)
        out[k] = take(s);
      kvm_result_free(r);
      kvm_link_free(l);
    });
  for (auto& t : ts) t.join();
  CHECK_FALSE(out[0].empty());
  for (const auto& o : out) CHECK(o == out[0]);
}
