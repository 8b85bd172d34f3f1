#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cobordism.hpp"

namespace kvm {

// Coefficients: the integers (p = 0) or the prime field F_p.
struct Ring {
  int p = 0;
  std::string name() const { return p == 0 ? "Z" : "F" + std::to_string(p); }
  bool operator==(const Ring&) const = default;
};
Ring parse_ring(std::string_view s);  // "Z", "F2", "F3", ...

struct SparseMatrix {
  struct Entry {
    int row;
    int col;
    int64_t value;
  };
  int rows = 0;
  int cols = 0;
  std::vector<Entry> entries;  // no duplicates, no zeros
};

struct SmithForm {
  int rank = 0;
  std::vector<int64_t> divisors;  // the nonzero invariant factors, each dividing the next
};

// Exact, with GMP integers during elimination. Divisors that do not fit in 64
// bits raise Internal.
SmithForm smith_normal_form(const SparseMatrix& m);
int rank_mod_p(const SparseMatrix& m, int p);  // direct elimination over F_p
int rank_mod_p(const SmithForm& s, int p);     // from the divisors

// One generator of the chain group of a cell: a label 1 or X on every circle the
// cell's diagram closes up to (bit set = X).
struct ChainGenerator {
  int cell;
  uint32_t bits;
};

// Chain groups and differentials split by bigrading. d[(h, q)] maps the group
// (h, q) to (h + 1, q); rows index the target basis.
struct IntegerMatrixComplex {
  std::map<std::pair<int, int>, std::vector<ChainGenerator>> basis;
  std::map<std::pair<int, int>, SparseMatrix> d;
  size_t rank() const;
};

// The Khovanov TQFT on a Morse complex whose presentation is closed or a braid.
// Braid complexes are closed up by the standard closure strands. Reduced: the
// generators with X on the circle through the last top point (braids), or the
// cells whose last loop is blue (closed diagrams; build the complex with a
// matching that stops below the last layer), shifted up by one in q. Both pick
// the component that close_braid ends with.
IntegerMatrixComplex apply_tqft(const MorseComplex& c, bool reduced);

// The dual complex, graded by (-h, -q): the complex of the mirror image.
IntegerMatrixComplex dual(const IntegerMatrixComplex& c);

void check_d_squared(const IntegerMatrixComplex& c);

struct HomologyEntry {
  int free = 0;
  std::vector<int64_t> torsion;  // divisors >= 2 in divisibility order
  bool operator==(const HomologyEntry&) const = default;
};

struct HomologyTable {
  Ring ring;
  bool reduced = false;
  std::map<std::pair<int, int>, HomologyEntry> entries;  // keyed by (i, j), zero groups omitted
  bool operator==(const HomologyTable& o) const { return ring == o.ring && reduced == o.reduced && entries == o.entries; }
};

// fp_direct: ranks over F_p by direct elimination instead of reducing the Smith
// form divisors.
HomologyTable homology(const IntegerMatrixComplex& c, Ring ring, bool reduced, bool fp_direct = false);

enum class Strategy { Greedy, Lex, FullCube };
const char* strategy_name(Strategy s);
Strategy parse_strategy(std::string_view s);

struct KhovanovOptions {
  Ring ring;
  bool reduced = false;
  Strategy strategy = Strategy::Greedy;
  // Braids with more positive than negative crossings are computed as the dual
  // of their mirror, whose greedy complexes are far smaller.
  bool mirror_positive = true;
  bool fp_direct = false;
  // false: a greedy matching that fails raises MatchingNotAcyclic instead of
  // switching to lex
  bool allow_fallback = true;
};

struct KhovanovResult {
  HomologyTable table;
  std::string link;
  Strategy requested = Strategy::Greedy;
  Strategy used = Strategy::Greedy;
  bool fallback = false;
  std::string fallback_reason;
  bool mirrored = false;
  std::string route;  // "open braid" or "closed diagram"
  size_t morse_cells = 0;
  size_t chain_rank = 0;
  // wall-clock milliseconds per phase; not part of the JSON output
  struct Timings {
    double matching = 0;  // matching and its verification
    double morse = 0;     // Morse complex
    double homology = 0;  // TQFT and Smith normal forms
  } timings;
};

// Crossing counts (n+, n-) of a closed diagram once every component is oriented
// (upward from the left end of its lowest cup). Layer labels fix the smoothings;
// a strand running downward flips the sign. Reversing a whole component of a
// link changes the answer, as usual.
std::pair<int, int> oriented_crossing_counts(const MorsePresentation& p);

// p is a closed presentation or a braid (closed automatically). Closed tangles
// are graded by oriented_crossing_counts, braids by their layer labels.
KhovanovResult khovanov(const MorsePresentation& p, const KhovanovOptions& opts = {});

// "<strands>:<generators>" for braids, the serialized tangle otherwise
std::string canonical_link_string(const MorsePresentation& p);
bool is_braid(const MorsePresentation& p);

std::string homology_json(const KhovanovResult& r);
std::string homology_csv(const HomologyTable& t);
// rows j (descending), columns i, in the usual table layout
std::string homology_grid(const HomologyTable& t);

// Sum over entries of (-1)^i q^j times the rank over Q (Z) or the dimension (F_p),
// as a map j -> coefficient.
std::map<int, int64_t> euler_characteristic(const HomologyTable& t);

}  // namespace kvm
