// kvm: command-line front end over the C API in include/kvm/kvm.h.
//
// Exit codes: 0 success, 1 bad input or other error, 2 a greedy matching with
// a cycle under --no-fallback or a verification counterexample, 3 budget
// exceeded.

#include <openssl/evp.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kvm/kvm.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitCyclic = 2;
constexpr int kExitBudget = 3;

struct Failure {
  kvm_status status;
  std::string message;
};

std::string take(char* s) {
  std::string out = s ? s : "";
  kvm_string_free(s);
  return out;
}

void check(kvm_status s) {
  if (s != KVM_OK) throw Failure{s, std::string(kvm_status_name(s)) + ": " + kvm_last_error()};
}

int exit_code_for(kvm_status s) {
  switch (s) {
    case KVM_OK: return kExitOk;
    case KVM_ERR_MATCHING_NOT_ACYCLIC: return kExitCyclic;
    case KVM_ERR_BUDGET_EXCEEDED: return kExitBudget;
    default: return kExitInput;
  }
}

using LinkPtr = std::unique_ptr<kvm_link, decltype(&kvm_link_free)>;

struct InputFlags {
  std::string braid;
  int strands = 0;
  std::string torus;
  std::string tangle_file;

  void add(CLI::App* app) {
    auto* b = app->add_option("--braid", braid, "braid word, e.g. \"1 -2 1\"");
    app->add_option("--strands", strands, "number of strands for --braid")->needs(b);
    auto* t = app->add_option("--torus", torus, "torus braid \"<strands> <twists>\", e.g. \"4 -7\"");
    auto* f = app->add_option("--tangle-file", tangle_file, "tangle file (bottom: <b>, then one layer per line)");
    b->excludes(t)->excludes(f);
    t->excludes(f);
  }

  LinkPtr load() const {
    kvm_link* l = nullptr;
    if (!braid.empty()) {
      int s = strands;
      if (s == 0) {
        // default: one more strand than the largest generator
        std::istringstream is(braid);
        for (int g; is >> g;) s = std::max(s, std::abs(g) + 1);
      }
      check(kvm_link_from_braid(braid.c_str(), s, &l));
    } else if (!torus.empty()) {
      std::istringstream is(torus);
      int s = 0, t = 0;
      if (!(is >> s >> t)) throw Failure{KVM_ERR_PARSE, "--torus expects \"<strands> <twists>\""};
      check(kvm_link_from_torus(s, t, &l));
    } else if (!tangle_file.empty()) {
      std::ifstream in(tangle_file);
      if (!in) throw Failure{KVM_ERR_PARSE, "cannot read " + tangle_file};
      std::stringstream ss;
      ss << in.rdbuf();
      check(kvm_link_from_tangle(ss.str().c_str(), &l));
    } else {
      throw Failure{KVM_ERR_PARSE, "one of --braid, --torus or --tangle-file is required"};
    }
    return LinkPtr(l, kvm_link_free);
  }
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{KVM_ERR_INVALID_ARGUMENT, "cannot write " + path};
  out << text;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
    throw Failure{KVM_ERR_INTERNAL, "SHA-256 failed"};
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// Content-addressed cache of formatted results, one JSON file per key.
class Cache {
 public:
  Cache() {
    if (const char* d = std::getenv("KVM_CACHE_DIR"); d && *d) dir_ = d;
    else if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) dir_ = fs::path(x) / "kvm";
    else if (const char* h = std::getenv("HOME"); h && *h) dir_ = fs::path(h) / ".cache" / "kvm";
  }

  std::optional<std::string> get(const std::string& key) const {
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    try {
      return json::parse(in).at("output").get<std::string>();
    } catch (const std::exception&) {
      return std::nullopt;  // unreadable entries are recomputed and overwritten
    }
  }

  void put(const std::string& key, const json& entry) const {
    if (dir_.empty()) return;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) return;
    const fs::path tmp = dir_ / (key + ".tmp." + std::to_string(::getpid()) + "." +
                                 std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) return;
      out << entry.dump(2);
    }
    fs::rename(tmp, dir_ / (key + ".json"), ec);
    if (ec) fs::remove(tmp, ec);
  }

 private:
  fs::path dir_;
};

kvm_strategy parse_strategy(const std::string& s) {
  if (s == "greedy") return KVM_STRATEGY_GREEDY;
  if (s == "lex") return KVM_STRATEGY_LEX;
  if (s == "full-cube") return KVM_STRATEGY_FULL_CUBE;
  throw Failure{KVM_ERR_PARSE, "unknown strategy '" + s + "'"};
}

int parse_ring(const std::string& s) {
  if (s == "Z") return 0;
  if (s.size() >= 2 && s[0] == 'F') {
    try {
      size_t used = 0;
      const int p = std::stoi(s.substr(1), &used);
      if (used == s.size() - 1 && p >= 2) return p;
    } catch (const std::exception&) {
    }
  }
  throw Failure{KVM_ERR_PARSE, "unknown ring '" + s + "' (Z, F2, F3, ...)"};
}

// --- homology ---------------------------------------------------------------

struct HomologyArgs {
  InputFlags in;
  std::string ring = "Z";
  bool reduced = false;
  std::string strategy = "greedy";
  std::string out;
  std::string format = "json";
  bool no_fallback = false;
  bool no_cache = false;
  bool timings = false;
  int cycle_len = 12;
};

int cmd_homology(const HomologyArgs& a) {
  LinkPtr link = a.in.load();
  kvm_homology_options o;
  kvm_homology_options_init(&o);
  o.ring = parse_ring(a.ring);
  o.reduced = a.reduced;
  o.strategy = parse_strategy(a.strategy);
  o.allow_fallback = !a.no_fallback;
  kvm_format fmt;
  if (a.format == "json") fmt = KVM_FORMAT_JSON;
  else if (a.format == "csv") fmt = KVM_FORMAT_CSV;
  else if (a.format == "grid") fmt = KVM_FORMAT_GRID;
  else throw Failure{KVM_ERR_PARSE, "unknown format '" + a.format + "'"};

  char* raw = nullptr;
  check(kvm_link_serialize(link.get(), &raw));
  const std::string material = take(raw) + "\nring=" + a.ring + ";reduced=" + (a.reduced ? "1" : "0") +
                               ";strategy=" + a.strategy + ";fallback=" + (a.no_fallback ? "0" : "1") +
                               ";format=" + a.format + "\nversion=" + kvm_version();
  const std::string key = sha256_hex(material);
  Cache cache;
  if (!a.no_cache)
    if (auto hit = cache.get(key)) {
      emit(*hit, a.out);
      if (a.timings) std::cerr << "cache hit " << key << "\n";
      return kExitOk;
    }

  kvm_result* r = nullptr;
  const kvm_status s = kvm_homology(link.get(), &o, &r);
  if (s == KVM_ERR_MATCHING_NOT_ACYCLIC && a.no_fallback) {
    std::cerr << "greedy matching is not acyclic: " << kvm_last_error() << "\n";
    char* rep = nullptr;
    check(kvm_match_report(link.get(), KVM_MATCHING_GREEDY, a.cycle_len, 0, &rep));
    const json full = json::parse(take(rep));
    json j;
    j["error"] = "GreedyCyclic";
    j["link"] = full["link"];
    j["verify"] = full["verify"];
    j["cycles"] = full["cycles"];
    j["cycle_lengths"] = full["cycle_lengths"];
    std::cout << j.dump(2) << "\n";
    return kExitCyclic;
  }
  check(s);
  std::unique_ptr<kvm_result, decltype(&kvm_result_free)> res(r, kvm_result_free);
  char* text = nullptr;
  check(kvm_result_format(res.get(), fmt, &text));
  const std::string output = take(text);
  double tm = 0, tc = 0, th = 0;
  kvm_result_timings(res.get(), &tm, &tc, &th);
  if (a.timings)
    std::cerr << "matching " << tm << " ms, morse " << tc << " ms, homology " << th << " ms\n";
  if (!a.no_cache) {
    json entry;
    entry["key_material"] = material;
    entry["output"] = output;
    entry["timings_ms"] = {{"matching", tm}, {"morse", tc}, {"homology", th}};
    cache.put(key, entry);
  }
  emit(output, a.out);
  return kExitOk;
}

// --- match -------------------------------------------------------------------

struct MatchArgs {
  InputFlags in;
  std::string matching = "greedy";
  bool dump_cells = false;
  int find_cycles = 0;
  std::string cell_graph;
  std::string out;
};

int cmd_match(const MatchArgs& a) {
  LinkPtr link = a.in.load();
  kvm_matching_kind kind;
  if (a.matching == "greedy") kind = KVM_MATCHING_GREEDY;
  else if (a.matching == "lex") kind = KVM_MATCHING_LEX;
  else throw Failure{KVM_ERR_PARSE, "unknown matching '" + a.matching + "'"};
  char* rep = nullptr;
  check(kvm_match_report(link.get(), kind, a.find_cycles, a.dump_cells, &rep));
  emit(take(rep), a.out);
  if (!a.cell_graph.empty()) {
    char* dot = nullptr;
    check(kvm_cell_graph(link.get(), kind, &dot));
    emit(take(dot), a.cell_graph);
  }
  return kExitOk;
}

// --- batch -------------------------------------------------------------------

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  return out;
}

struct Row {
  std::string name;
  int strands = 0;
  std::string word;
  std::optional<uint64_t> minimal;
  // results
  int crossings = 0;
  kvm_sizes sizes{};
  std::string error;
};

struct BatchArgs {
  std::string csv;
  int jobs = 0;
  std::string out;
  std::string format = "csv";
};

int cmd_batch(const BatchArgs& a) {
  std::ifstream in(a.csv);
  if (!in) throw Failure{KVM_ERR_PARSE, "cannot read " + a.csv};
  std::vector<Row> rows;
  std::string line;
  int col_name = 0, col_strands = 1, col_word = 2, col_min = 3;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto f = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (!f.empty() && f[0] == "name") {
        col_min = -1;
        for (int k = 0; k < static_cast<int>(f.size()); ++k) {
          if (f[k] == "name") col_name = k;
          else if (f[k] == "strands") col_strands = k;
          else if (f[k] == "braid_word") col_word = k;
          else if (f[k] == "minimal_size_f2") col_min = k;
        }
        continue;
      }
    }
    Row r;
    auto field = [&](int k) { return k >= 0 && k < static_cast<int>(f.size()) ? f[k] : std::string(); };
    r.name = field(col_name);
    r.word = field(col_word);
    try {
      r.strands = std::stoi(field(col_strands));
    } catch (const std::exception&) {
      r.error = "bad strands field";
    }
    if (const std::string m = field(col_min); !m.empty()) {
      try {
        r.minimal = std::stoull(m);
      } catch (const std::exception&) {
        r.error = "bad minimal_size_f2 field";
      }
    }
    rows.push_back(std::move(r));
  }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned jobs = a.jobs > 0 ? static_cast<unsigned>(a.jobs) : hw;
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t k; (k = next++) < rows.size();) {
      Row& r = rows[k];
      if (!r.error.empty()) continue;
      kvm_link* l = nullptr;
      kvm_status s = kvm_link_from_braid(r.word.c_str(), r.strands, &l);
      if (s == KVM_OK) {
        r.crossings = kvm_link_crossings(l);
        s = kvm_complex_sizes(l, &r.sizes);
      }
      if (s != KVM_OK) r.error = std::string(kvm_status_name(s)) + ": " + kvm_last_error();
      kvm_link_free(l);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<size_t>(jobs, rows.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  uint64_t tot_full = 0, tot_gr = 0, tot_lex = 0;
  size_t with_min = 0, lex_min = 0, gr_min = 0, cyclic = 0, failed = 0;
  for (const Row& r : rows) {
    if (!r.error.empty()) {
      ++failed;
      continue;
    }
    tot_full += r.sizes.full;
    tot_gr += r.sizes.greedy;
    tot_lex += r.sizes.lex;
    cyclic += r.sizes.greedy_acyclic == 0;
    if (r.minimal) {
      ++with_min;
      lex_min += r.sizes.lex == *r.minimal;
      gr_min += r.sizes.greedy == *r.minimal;
    }
  }
  auto ratio = [](uint64_t a, uint64_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; };

  std::ostringstream os;
  if (a.format == "json") {
    json j;
    auto& arr = j["rows"] = json::array();
    for (const Row& r : rows) {
      json x;
      x["name"] = r.name;
      x["strands"] = r.strands;
      x["braid_word"] = r.word;
      if (r.error.empty()) {
        x["crossings"] = r.crossings;
        x["full"] = r.sizes.full;
        x["greedy"] = r.sizes.greedy;
        x["lex"] = r.sizes.lex;
        x["greedy_acyclic"] = r.sizes.greedy_acyclic == 1 ? "yes" : r.sizes.greedy_acyclic == 0 ? "no" : "undecided";
      } else {
        x["error"] = r.error;
      }
      if (r.minimal) x["minimal_size_f2"] = *r.minimal;
      arr.push_back(x);
    }
    j["totals"] = {{"rows", rows.size()},   {"failed", failed},       {"full", tot_full},
                   {"greedy", tot_gr},      {"lex", tot_lex},         {"greedy_over_full", ratio(tot_gr, tot_full)},
                   {"lex_over_full", ratio(tot_lex, tot_full)}, {"greedy_cyclic", cyclic},
                   {"rows_with_minimal", with_min}, {"lex_minimal", lex_min}, {"greedy_minimal", gr_min}};
    os << j.dump(2) << "\n";
  } else if (a.format == "csv") {
    os << "name,strands,crossings,full,greedy,lex,greedy_acyclic,minimal_size_f2,lex_is_minimal,error\n";
    for (const Row& r : rows) {
      os << r.name << "," << r.strands << ",";
      if (r.error.empty())
        os << r.crossings << "," << r.sizes.full << "," << r.sizes.greedy << "," << r.sizes.lex << ","
           << (r.sizes.greedy_acyclic == 1 ? "yes" : r.sizes.greedy_acyclic == 0 ? "no" : "undecided");
      else
        os << ",,,,";
      os << "," << (r.minimal ? std::to_string(*r.minimal) : "") << ","
         << (r.minimal && r.error.empty() ? (r.sizes.lex == *r.minimal ? "yes" : "no") : "") << ",\""
         << r.error << "\"\n";
    }
  } else {
    throw Failure{KVM_ERR_PARSE, "unknown batch format '" + a.format + "'"};
  }
  emit(os.str(), a.out);
  if (!rows.empty())
    std::cerr << "rows " << rows.size() << " (failed " << failed << "), totals full " << tot_full << ", greedy "
              << tot_gr << ", lex " << tot_lex << "; greedy cyclic " << cyclic << "; lex minimal " << lex_min << "/"
              << with_min << "\n";
  return kExitOk;
}

// --- verify ------------------------------------------------------------------

struct VerifyArgs {
  std::string check;
  std::optional<int> n, n_from, n_max, n_max_order, n_max_cover, a_max, budget_n;
  std::string ring = "Z";
  bool reduced = false;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  json prm = json::object();
  if (a.n) prm["n_from"] = prm["n_max"] = *a.n;
  if (a.n_from) prm["n_from"] = *a.n_from;
  if (a.n_max) prm["n_max"] = *a.n_max;
  if (a.n_max_order) prm["n_max_order"] = *a.n_max_order;
  if (a.n_max_cover) prm["n_max_cover"] = *a.n_max_cover;
  if (a.a_max) prm["a_max"] = *a.a_max;
  if (a.budget_n) prm["budget_n"] = *a.budget_n;
  prm["ring"] = a.ring;
  prm["reduced"] = a.reduced;
  char* rep = nullptr;
  int ok = 0;
  const kvm_status s = kvm_verify(a.check.c_str(), prm.dump().c_str(), &rep, &ok);
  if (s != KVM_OK && s != KVM_ERR_BUDGET_EXCEEDED) check(s);
  std::cout << take(rep) << "\n";
  if (a.check == "gor" && !a.out.empty()) {
    char* csv = nullptr;
    check(kvm_gor_csv(a.a_max.value_or(60), &csv));
    emit(take(csv), a.out);
  }
  if (s == KVM_ERR_BUDGET_EXCEEDED) {
    std::cerr << "budget exceeded: " << kvm_last_error() << " (partial report)\n";
    return kExitBudget;
  }
  return ok ? kExitOk : kExitCyclic;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kvm: Khovanov homology through Morse matchings"};
  app.set_version_flag("--version", std::string(kvm_version()));
  app.require_subcommand(1);

  HomologyArgs ha;
  auto* h = app.add_subcommand("homology", "compute a Khovanov homology table");
  ha.in.add(h);
  h->add_option("--ring", ha.ring, "Z, F2, F3, ...");
  h->add_flag("--reduced", ha.reduced);
  h->add_option("--strategy", ha.strategy, "greedy | lex | full-cube");
  h->add_option("--out", ha.out, "output file (default stdout)");
  h->add_option("--format", ha.format, "json | csv | grid");
  h->add_flag("--no-fallback", ha.no_fallback, "exit 2 instead of switching from a cyclic greedy matching to lex");
  h->add_flag("--no-cache", ha.no_cache, "recompute and do not store");
  h->add_flag("--timings", ha.timings, "phase timings on stderr");
  h->add_option("--cycle-length", ha.cycle_len, "longest cycle listed when --no-fallback fails");

  MatchArgs ma;
  auto* m = app.add_subcommand("match", "build a matching and report on it");
  ma.in.add(m);
  m->add_option("--matching", ma.matching, "lex | greedy");
  m->add_flag("--dump-cells", ma.dump_cells, "list every matched edge");
  m->add_option("--find-cycles", ma.find_cycles, "list the cycles of G(C, M) up to this length");
  m->add_option("--cell-graph", ma.cell_graph, "write G(C, M) in Graphviz format to this file");
  m->add_option("--out", ma.out);

  BatchArgs ba;
  auto* b = app.add_subcommand("batch", "complex sizes for a CSV of braids (name, strands, braid_word[, minimal_size_f2])");
  b->add_option("csv", ba.csv)->required();
  b->add_option("--jobs", ba.jobs, "worker threads (default: all cores)");
  b->add_option("--out", ba.out);
  b->add_option("--format", ba.format, "csv | json");

  VerifyArgs va;
  auto* v = app.add_subcommand("verify", "checks on the 4-strand torus braids");
  v->add_option("--check", va.check, "W=U | bijection | base-lemmas | recursion-A | recursion-B | recursion-C | vanishing | gor")
      ->required();
  v->add_option("--n", va.n, "a single n");
  v->add_option("--n-from", va.n_from);
  v->add_option("--n-max", va.n_max);
  v->add_option("--n-max-order", va.n_max_order, "range of the h/o/q implication (base-lemmas)");
  v->add_option("--n-max-cover", va.n_max_cover, "range of the squared-pattern coverage (base-lemmas)");
  v->add_option("--a-max", va.a_max, "t-degree bound of the series (gor)");
  v->add_option("--budget-n", va.budget_n, "largest n computed before giving up with exit 3");
  v->add_option("--ring", va.ring);
  v->add_flag("--reduced", va.reduced);
  v->add_option("--out", va.out, "gor: coefficient CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (h->parsed()) return cmd_homology(ha);
    if (m->parsed()) return cmd_match(ma);
    if (b->parsed()) return cmd_batch(ba);
    if (v->parsed()) return cmd_verify(va);
  } catch (const Failure& f) {
    std::cerr << "kvm: " << f.message << "\n";
    return exit_code_for(f.status);
  } catch (const std::exception& e) {
    std::cerr << "kvm: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
