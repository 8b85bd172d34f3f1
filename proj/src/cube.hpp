#pragma once

#include <optional>
#include <vector>

#include "diagram.hpp"

namespace kvm {

enum class EdgeKind : uint8_t { Zero, Iso, Dot, Saddle };
enum class SaddleShape : uint8_t { Merge, Split, Recombine };

struct EdgeClass {
  EdgeKind kind = EdgeKind::Zero;
  SaddleShape shape = SaddleShape::Merge;
  int sign = 1;
  int i = 0;    // flipped layer
  int u = -1;   // only for Iso
  // for Dot edges: a boundary point (in the source numbering) of the dotted arc
  int dot_end = -1;
};

const char* edge_kind_name(EdgeKind k);

int edge_sign(const Word& a, int layer);

// Classify the matrix element a -> b (Zero when they are not adjacent).
EdgeClass classify_edge(const MorsePresentation& p, const Word& a, const Word& b);

struct Neighbor {
  Word cell;
  EdgeClass cls;
  bool out;  // true: x -> cell is the matrix element; false: cell -> x
};

// All nonzero edges incident to x. Works for prefix words as well (the prefix is
// then treated as a cell of cut_|x|).
std::vector<Neighbor> neighbors(const MorsePresentation& p, const Word& x);

// Only the edges leaving x (x is the source).
std::vector<Neighbor> out_neighbors(const MorsePresentation& p, const Word& x);

// Only edges that flip the given layer.
std::vector<Neighbor> neighbors_at(const MorsePresentation& p, const Word& x, const PlanarState& sx, int layer);

std::optional<Word> isopair(const MorsePresentation& p, const Word& a, int j, int k);

}  // namespace kvm
