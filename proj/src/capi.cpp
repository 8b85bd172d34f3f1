#include "kvm/kvm.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "homology.hpp"
#include "torus.hpp"

#ifndef KVM_VERSION
#define KVM_VERSION "0.0.0"
#endif

struct kvm_link {
  kvm::MorsePresentation p;
};

struct kvm_result {
  kvm::KhovanovResult r;
  std::vector<std::pair<std::pair<int, int>, kvm::HomologyEntry>> flat;
};

namespace {

thread_local std::string g_last_error;

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

kvm_status to_status(kvm::ErrorCode c) { return static_cast<kvm_status>(static_cast<int>(c)); }

template <class F>
kvm_status guard(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const kvm::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const InvalidArgument& e) {
    g_last_error = e.what();
    return KVM_ERR_INVALID_ARGUMENT;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return KVM_ERR_PARSE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KVM_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kvm_status give(const std::string& s, char** out) {
  require(out != nullptr, "null output pointer");
  *out = dup(s);
  return KVM_OK;
}

kvm::MatchingKind matching_kind(kvm_matching_kind k) {
  return k == KVM_MATCHING_GREEDY ? kvm::MatchingKind::Greedy : kvm::MatchingKind::Lex;
}

int get_int(const nlohmann::json& j, const char* key, int dflt) { return j.contains(key) ? j.at(key).get<int>() : dflt; }

}  // namespace

extern "C" {

const char* kvm_version(void) { return KVM_VERSION; }

const char* kvm_status_name(kvm_status s) {
  if (s == KVM_ERR_INVALID_ARGUMENT) return "InvalidArgument";
  if (s < KVM_OK || s > KVM_ERR_INVALID_ARGUMENT) return "Unknown";
  return s == KVM_OK ? "Ok" : kvm::error_name(static_cast<kvm::ErrorCode>(s));
}

const char* kvm_last_error(void) { return g_last_error.c_str(); }

void kvm_string_free(char* s) { std::free(s); }

kvm_status kvm_link_from_braid(const char* word, int strands, kvm_link** out) {
  return guard([&] {
    require(word && out, "null argument");
    *out = new kvm_link{kvm::parse_braid_word(word, strands)};
    return KVM_OK;
  });
}

kvm_status kvm_link_from_torus(int strands, int twists, kvm_link** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    require(strands >= 1, "a torus braid needs at least one strand");
    *out = new kvm_link{kvm::torus_braid(strands, twists)};
    return KVM_OK;
  });
}

kvm_status kvm_link_from_tangle(const char* text, kvm_link** out) {
  return guard([&] {
    require(text && out, "null argument");
    *out = new kvm_link{kvm::parse_tangle(text)};
    return KVM_OK;
  });
}

kvm_status kvm_link_mirror(const kvm_link* link, kvm_link** out) {
  return guard([&] {
    require(link && out, "null argument");
    *out = new kvm_link{kvm::mirror(link->p)};
    return KVM_OK;
  });
}

kvm_status kvm_link_serialize(const kvm_link* link, char** out) {
  return guard([&] {
    require(link != nullptr, "null link");
    return give(kvm::serialize_tangle(link->p), out);
  });
}

kvm_status kvm_link_canonical(const kvm_link* link, char** out) {
  return guard([&] {
    require(link != nullptr, "null link");
    return give(kvm::canonical_link_string(link->p), out);
  });
}

int kvm_link_crossings(const kvm_link* link) { return link ? link->p.num_crossings() : 0; }

void kvm_link_free(kvm_link* link) { delete link; }

void kvm_homology_options_init(kvm_homology_options* opts) {
  if (!opts) return;
  opts->ring = 0;
  opts->reduced = 0;
  opts->strategy = KVM_STRATEGY_GREEDY;
  opts->allow_fallback = 1;
  opts->mirror_positive = 1;
}

kvm_status kvm_homology(const kvm_link* link, const kvm_homology_options* opts, kvm_result** out) {
  return guard([&] {
    require(link && out, "null argument");
    kvm_homology_options o;
    kvm_homology_options_init(&o);
    if (opts) o = *opts;
    require(o.strategy >= KVM_STRATEGY_GREEDY && o.strategy <= KVM_STRATEGY_FULL_CUBE, "unknown strategy");
    kvm::KhovanovOptions k;
    k.ring = kvm::parse_ring(o.ring == 0 ? "Z" : "F" + std::to_string(o.ring));
    k.reduced = o.reduced != 0;
    k.strategy = static_cast<kvm::Strategy>(o.strategy);
    k.allow_fallback = o.allow_fallback != 0;
    k.mirror_positive = o.mirror_positive != 0;
    auto res = std::make_unique<kvm_result>();
    res->r = kvm::khovanov(link->p, k);
    res->flat.assign(res->r.table.entries.begin(), res->r.table.entries.end());
    *out = res.release();
    return KVM_OK;
  });
}

kvm_status kvm_result_format(const kvm_result* r, kvm_format fmt, char** out) {
  return guard([&] {
    require(r != nullptr, "null result");
    switch (fmt) {
      case KVM_FORMAT_JSON: return give(kvm::homology_json(r->r), out);
      case KVM_FORMAT_CSV: return give(kvm::homology_csv(r->r.table), out);
      case KVM_FORMAT_GRID: return give(kvm::homology_grid(r->r.table), out);
    }
    throw InvalidArgument("unknown format");
  });
}

int kvm_result_fallback(const kvm_result* r) { return r && r->r.fallback ? 1 : 0; }

size_t kvm_result_entry_count(const kvm_result* r) { return r ? r->flat.size() : 0; }

kvm_status kvm_result_entry(const kvm_result* r, size_t k, int* i, int* j, int* free_rank, int64_t* torsion,
                            size_t torsion_cap, size_t* torsion_count) {
  return guard([&] {
    require(r != nullptr, "null result");
    if (k >= r->flat.size()) throw kvm::Error(kvm::ErrorCode::IndexOutOfRange, "entry index out of range");
    const auto& [key, e] = r->flat[k];
    if (i) *i = key.first;
    if (j) *j = key.second;
    if (free_rank) *free_rank = e.free;
    if (torsion_count) *torsion_count = e.torsion.size();
    for (size_t t = 0; torsion && t < e.torsion.size() && t < torsion_cap; ++t) torsion[t] = e.torsion[t];
    return KVM_OK;
  });
}

void kvm_result_timings(const kvm_result* r, double* matching, double* morse, double* homology) {
  if (!r) return;
  if (matching) *matching = r->r.timings.matching;
  if (morse) *morse = r->r.timings.morse;
  if (homology) *homology = r->r.timings.homology;
}

void kvm_result_free(kvm_result* r) { delete r; }

kvm_status kvm_match_report(const kvm_link* link, kvm_matching_kind kind, int find_cycles, int dump_edges,
                            char** out_json) {
  return guard([&] {
    require(link != nullptr, "null link");
    const kvm::MorsePresentation& p = link->p;
    const kvm::Matching m = kvm::Matching::build(p, matching_kind(kind));
    nlohmann::ordered_json j;
    j["link"] = kvm::canonical_link_string(p);
    j["matching"] = kvm::matching_kind_name(m.kind());
    std::vector<std::string> cells;
    std::map<std::pair<int, int>, size_t> per_degree;
    for (const auto& w : m.unmatched()) {
      cells.push_back(kvm::word_to_string(w));
      const kvm::Grading g = kvm::gradings(p, w);
      ++per_degree[{g.h, g.q}];
    }
    j["unmatched"] = cells;
    j["dim_kom"] = cells.size();
    auto& dc = j["dim_cob"] = nlohmann::ordered_json::array();
    for (const auto& [k, n] : per_degree) dc.push_back({{"h", k.first}, {"q", k.second}, {"count", n}});
    const kvm::VerifyReport rep = kvm::verify_matching(m);
    j["acyclic"] = rep.ok() ? "yes" : rep.kind == kvm::ViolationKind::Budget ? "undecided" : "no";
    j["verify"] = {{"verdict", kvm::violation_name(rep.kind)}, {"method", rep.method}, {"explored", rep.explored}};
    if (!rep.witness.empty()) {
      std::vector<std::string> wit;
      for (const auto& w : rep.witness) wit.push_back(kvm::word_to_string(w));
      j["verify"]["witness"] = wit;
    }
    if (find_cycles > 0) {
      const auto cs = kvm::find_cycles(m, find_cycles);
      j["cycles"] = nlohmann::ordered_json::parse(kvm::cycles_json(cs))["cycles"];
      j["cycles_budget_exceeded"] = cs.budget_exceeded;
      std::vector<size_t> lengths;
      for (const auto& c : cs.cycles) lengths.push_back(c.length());
      j["cycle_lengths"] = lengths;
    }
    if (dump_edges) {
      std::vector<std::string> lines;
      const std::string dump = kvm::matching_dump(m);
      for (size_t a = 0, b; a < dump.size(); a = b + 1) {
        b = dump.find('\n', a);
        lines.push_back(dump.substr(a, b - a));
      }
      j["edges"] = lines;
    }
    return give(j.dump(2), out_json);
  });
}

kvm_status kvm_cell_graph(const kvm_link* link, kvm_matching_kind kind, char** out_dot) {
  return guard([&] {
    require(link != nullptr, "null link");
    return give(kvm::cell_graph_dot(kvm::Matching::build(link->p, matching_kind(kind))), out_dot);
  });
}

kvm_status kvm_complex_sizes(const kvm_link* link, kvm_sizes* out) {
  return guard([&] {
    require(link && out, "null argument");
    const kvm::MorsePresentation& p = link->p;
    std::vector<kvm::Word> cur{kvm::Word{}};
    for (int l = 1; l <= p.num_layers(); ++l) cur = kvm::expand(p, cur);
    out->full = cur.size();
    cur.clear();
    const auto gr = kvm::Matching::build(p, kvm::MatchingKind::Greedy);
    out->greedy = gr.unmatched().size();
    const auto rep = kvm::verify_matching(gr);
    out->greedy_acyclic = rep.ok() ? 1 : rep.kind == kvm::ViolationKind::Budget ? -1 : 0;
    out->lex = kvm::Matching::build(p, kvm::MatchingKind::Lex).unmatched().size();
    return KVM_OK;
  });
}

kvm_status kvm_verify(const char* check, const char* params_json, char** out_json, int* all_ok) {
  return guard([&] {
    require(check != nullptr, "null check name");
    const nlohmann::json prm = params_json && *params_json ? nlohmann::json::parse(params_json) : nlohmann::json::object();
    const std::string c = check;
    const int budget = get_int(prm, "budget_n", 60);
    bool over = false;
    auto clamp = [&](int n) {
      if (n > budget) over = true;
      return std::min(n, budget);
    };
    std::vector<kvm::CheckReport> reports;

    if (c == "W=U") {
      reports.push_back(kvm::verify_W_equals_U(clamp(get_int(prm, "n_max", 12))));
    } else if (c == "bijection") {
      const int hi = clamp(get_int(prm, "n_max", 14) + 4) - 4;
      for (int n = get_int(prm, "n_from", 0); n <= hi; ++n) {
        const auto un = kvm::unmatched_torus(n), un4 = kvm::unmatched_torus(n + 4);
        for (kvm::Pattern pt : kvm::kPatterns) reports.push_back(kvm::verify_bijection(n, pt, un, un4));
      }
    } else if (c == "base-lemmas") {
      kvm::BaseLemmaOptions o;
      o.n_max_t = clamp(get_int(prm, "n_max", o.n_max_t));
      o.n_max_order = get_int(prm, "n_max_order", o.n_max_order);
      o.n_max_cover = get_int(prm, "n_max_cover", o.n_max_cover);
      reports = kvm::check_base_lemmas(o);
    } else if (c == "recursion-A" || c == "recursion-B" || c == "recursion-C" || c == "vanishing") {
      kvm::KhovanovOptions ko;
      ko.ring = kvm::parse_ring(prm.contains("ring") ? prm.at("ring").get<std::string>() : "Z");
      ko.reduced = prm.contains("reduced") && prm.at("reduced").get<bool>();
      std::map<int, kvm::HomologyTable> tables;
      auto table = [&](int n) -> const kvm::HomologyTable& {
        auto it = tables.find(n);
        if (it == tables.end()) it = tables.emplace(n, kvm::khovanov(kvm::torus_braid(4, -n), ko).table).first;
        return it->second;
      };
      if (c == "vanishing") {
        const int hi = clamp(get_int(prm, "n_max", 7));
        for (int n = get_int(prm, "n_from", 0); n <= hi; ++n) reports.push_back(kvm::verify_vanishing(n, table(n)));
      } else {
        const kvm::Recursion which = c.back() == 'A' ? kvm::Recursion::A : c.back() == 'B' ? kvm::Recursion::B : kvm::Recursion::C;
        const int hi = clamp(get_int(prm, "n_max", 5) + 4) - 4;
        for (int n = get_int(prm, "n_from", 3); n <= hi; ++n)
          reports.push_back(kvm::verify_recursion(n, which, table(n), table(n + 4)));
      }
    } else if (c == "gor") {
      reports = kvm::check_gor(get_int(prm, "a_max", 60));
    } else {
      throw InvalidArgument("unknown check '" + c + "'");
    }

    bool ok = true;
    for (const auto& r : reports) ok = ok && r.ok();
    if (all_ok) *all_ok = ok ? 1 : 0;
    give(kvm::reports_json(reports), out_json);
    if (over) {
      g_last_error = "bounds clamped to budget_n = " + std::to_string(budget);
      return KVM_ERR_BUDGET_EXCEEDED;
    }
    return KVM_OK;
  });
}

kvm_status kvm_gor_csv(int a_max, char** out_csv) {
  return guard([&] { return give(kvm::series_csv(kvm::gor_series_f2(a_max)), out_csv); });
}

}  // extern "C"
