#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cube.hpp"

namespace kvm {

enum class MatchingKind { Lex, Greedy };

const char* matching_kind_name(MatchingKind k);

struct MatchInfo {
  Word partner;
  bool source;  // true when this cell is the source of the matched edge (lower h)
  int level;    // u of the matched edge
  int j;        // i of the matched edge
};

// Matchings produced by the layered algorithms. A cell of cut_m (for any m) is
// looked up through its prefixes, which is enough by the locality of matched
// edges: the partner of w.r is v.r when w is matched to v at level |w|.
class Matching {
 public:
  // max_level < 0 means all layers. Levels above max_level only expand.
  static Matching build(const MorsePresentation& p, MatchingKind kind, int max_level = -1);

  MatchingKind kind() const { return kind_; }
  const MorsePresentation& presentation() const { return p_; }
  int max_level() const { return max_level_; }

  // unmatched cells of the full presentation, sorted by serialized word
  const std::vector<Word>& unmatched() const { return unmatched_; }

  std::optional<MatchInfo> lookup(const Word& w) const;
  // only the pairs recorded at one level; w must have that length
  std::optional<MatchInfo> lookup_at(const Word& w, int level) const;

  // matched pairs recorded at a level, as (source prefix, target prefix, j)
  struct Pair {
    Word source;
    Word target;
    int j;
  };
  std::vector<Pair> pairs_at(int level) const;
  size_t num_pairs() const;
  // number of prefixes present right after expanding at each level
  const std::vector<size_t>& expanded_sizes() const { return expanded_sizes_; }

 private:
  struct Entry {
    Word partner;
    bool source;
    int j;
  };
  MorsePresentation p_;
  MatchingKind kind_ = MatchingKind::Greedy;
  int max_level_ = 0;
  std::vector<std::unordered_map<Word, Entry>> levels_;
  std::vector<Word> unmatched_;
  std::vector<size_t> expanded_sizes_;
};

std::vector<Word> unmatched_lex(const MorsePresentation& p);
std::vector<Word> unmatched_greedy(const MorsePresentation& p);

struct VertexMatch {
  Word partner;
  bool source;
};

std::optional<VertexMatch> match_vertex_lex(const MorsePresentation& p, const Word& a);
std::optional<VertexMatch> match_vertex_greedy(const MorsePresentation& p, const Word& a, int recursion_cap = 10000);

enum class ViolationKind { None, NotIso, Adjacent, Cycle, Budget };

const char* violation_name(ViolationKind k);

struct VerifyReport {
  ViolationKind kind = ViolationKind::None;
  std::vector<Word> witness;
  std::string method;       // "local", "exhaustive" or "layered"
  size_t explored = 0;      // cells (or prefix cells) visited
  bool ok() const { return kind == ViolationKind::None; }
};

// Exhaustive check over all cells; gives up with Budget when there are more than
// `budget` cells.
VerifyReport verify_matching_exhaustive(const Matching& m, size_t budget = 2'000'000);

// Level-by-level certificate. A cycle of G(C, M) whose highest matching level is
// L truncates to a cycle of the graph of cut_L that passes through a cell matched
// at level L, and on such a cycle every forward edge flips a layer no higher than
// the matching levels of both of its ends. The search starts from the cells
// matched at level L and follows only such edges.
VerifyReport verify_matching_layered(const Matching& m, size_t budget = 20'000'000);

// Local certificate. Let b -> c be an edge of a cycle with the smallest flipped
// layer I. The layer-I token has to come back, so b -> c is a reversed matched
// edge, and the cycle contains z -> a -> b -> c -> d with every flip at least I.
// The check looks for such windows around every matched pair, working on the
// prefixes of length k(c -> b) only. Finding none proves acyclicity; finding one
// proves nothing, and the report then carries ViolationKind::Budget.
VerifyReport verify_matching_local(const Matching& m);

// Local certificate first, then exhaustive when the cell count is small and
// layered otherwise.
VerifyReport verify_matching(const Matching& m);

struct CycleReport {
  std::vector<Word> cycle;  // x1 -> x2 -> ... -> xL -> x1
  size_t length() const { return cycle.size(); }
};

struct CycleSearch {
  std::vector<CycleReport> cycles;
  bool budget_exceeded = false;
};

// Elementary directed cycles of G(C, M) of length at most max_len.
CycleSearch find_cycles(const Matching& m, int max_len, size_t cell_budget = 2'000'000, size_t cycle_budget = 10000);

// One matched edge per line, "<source> => <target> i=<j> u=<level>", over all
// cells of the presentation in serialized order. BudgetExceeded above
// `cell_budget` cells.
std::string matching_dump(const Matching& m, size_t cell_budget = 200'000);

// G(C, M) in Graphviz format: every nonzero matrix element, matched edges
// reversed and drawn bold, unmatched cells boxed.
std::string cell_graph_dot(const Matching& m, size_t cell_budget = 5'000);

// {"cycles": [[cell, ...], ...], "budget_exceeded": bool}
std::string cycles_json(const CycleSearch& s);

}  // namespace kvm
