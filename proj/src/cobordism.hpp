#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "matching.hpp"

namespace kvm {

// A loopless Temperley-Lieb diagram: the partner of every boundary point, bottom
// points first (the arc_partner of a scanned cell).
using Pairing = std::vector<int>;

// Circles of the closed curve set a ∪ b (two pairings on the same points),
// numbered by their smallest point.
struct CircleMap {
  std::vector<int> of_point;
  int count = 0;
};
CircleMap circles(const Pairing& a, const Pairing& b);

// One normal-form summand: a disc on every circle of source ∪ target, dotted
// where `dots` has a bit set. Neck cutting and the sphere/torus evaluations
// reduce every dotted cobordism between loopless diagrams to a sum of these.
struct CobTerm {
  uint32_t dots;
  int64_t coeff;
  bool operator==(const CobTerm&) const = default;
};
using CobTerms = std::vector<CobTerm>;  // sorted by dots, no zero coefficients

struct DottedCobordism {
  Pairing source;
  Pairing target;
  CobTerms terms;

  bool is_zero() const { return terms.empty(); }
  bool operator==(const DottedCobordism&) const = default;
};

DottedCobordism identity_cobordism(const Pairing& d, int64_t coeff = 1);
// identity with one dot on the arc through boundary point `point`
DottedCobordism dotted_identity(const Pairing& d, int point, int64_t coeff = 1);
// the elementary saddle between two diagrams that differ in two arcs
DottedCobordism saddle_cobordism(const Pairing& a, const Pairing& b, int64_t coeff = 1);

// g ∘ f; requires f.target == g.source
DottedCobordism compose(const DottedCobordism& f, const DottedCobordism& g);
DottedCobordism add(const DottedCobordism& f, const DottedCobordism& g);
DottedCobordism scale(const DottedCobordism& f, int64_t c);

// Normal form of a connected surface with `boundary` boundary circles, genus g
// and d dots, as terms over those circles (bit i = circle i dotted).
CobTerms connected_normal_form(int boundary, int genus, int dots);

// degree χ - 2·dots - (#boundary points)/2 of one summand
int term_degree(const DottedCobordism& f, const CobTerm& t);

// Generator of a nonzero matrix element a -> b (Iso, Dot or Saddle), with its sign.
DottedCobordism generator_cobordism(const MorsePresentation& p, const Word& a, const Word& b, const EdgeClass& e);

// R(a -> b) for a forward edge, or -(a -> b)^{-1} for a matched Iso read backwards
// (then the result goes from b to a).
DottedCobordism remembering(const MorsePresentation& p, const Word& a, const Word& b, const EdgeClass& e, bool reversed);

struct MorseCell {
  Word word;
  Grading grading;
  Pairing diagram;
};

struct MorseEntry {
  int from;  // index into cells, degree h
  int to;    // index into cells, degree h + 1
  CobTerms value;
};

struct MorseComplex {
  MorsePresentation presentation;
  MatchingKind kind = MatchingKind::Greedy;
  bool full_cube = false;
  std::vector<MorseCell> cells;     // sorted by (h, serialized word)
  std::vector<MorseEntry> entries;  // sorted by (from, to)
  size_t memo_cells = 0;            // matched cells visited by the path sums
  int boundary_points() const { return presentation.bottom() + presentation.top(); }
};

struct MorseOptions {
  // only unmatched cells passing the filter become cells of the complex; paths
  // reaching a filtered cell are an error (the filter must cut out a subcomplex)
  std::function<bool(const Word&)> keep;
  bool check_d2 = true;
  bool check_degree = true;
  // Sum zig-zag paths over the whole cell graph instead of building the complex
  // one layer at a time. Same result; the direct sums grow quickly with the
  // number of matched cells and serve as the reference.
  bool direct = false;
};

// The default construction keeps the Morse complex of the first k layers, tensors
// it with layer k+1 (delooping a loop the layer closes) and cancels the pairs
// recorded at level k+1. Throws MatchingNotAcyclic when a path revisits a cell
// or a recorded pair is no longer an isomorphism; the d² and degree checks
// throw Internal.
MorseComplex build_morse_complex(const Matching& m, const MorseOptions& opts = {});

// d² = 0 entrywise; returns the number of (a, c) pairs checked
size_t check_d_squared(const MorseComplex& c);

struct DegreeCount {
  int h;
  int q;
  size_t count;
};
std::vector<DegreeCount> dim_cob_per_degree(const MorseComplex& c);
size_t dim_kom(const MorseComplex& c);

std::string morse_complex_json(const MorseComplex& c);

}  // namespace kvm
