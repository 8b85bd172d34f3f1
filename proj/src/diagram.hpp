#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kvm {

enum class ErrorCode {
  Ok = 0,
  ParseError,
  IndexOutOfRange,
  NotABraid,
  ShapeMismatch,
  ColorPlacementError,
  NotClosed,
  BadBasepoint,
  MatchingNotAcyclic,
  RecursionDepthExceeded,
  NonUniqueIsoPair,
  InvertNonIso,
  PatternAbsent,
  BudgetExceeded,
  Internal,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code_(c) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

enum class LayerKind : uint8_t { Positive, Negative, Cap, Cup };

struct Layer {
  LayerKind kind;
  int pos;  // 1-based leftmost strand
  bool is_crossing() const { return kind == LayerKind::Positive || kind == LayerKind::Negative; }
  bool operator==(const Layer&) const = default;
};

class MorsePresentation {
 public:
  MorsePresentation() = default;
  MorsePresentation(int bottom, std::vector<Layer> layers);

  int bottom() const { return bottom_; }
  int top() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }
  // layer is 1-based, as everywhere in the public interface
  const Layer& layer(int l) const { return layers_[l - 1]; }
  // width of the strands directly below layer l (l = num_layers()+1 gives the top)
  int width_below(int l) const { return widths_[l - 1]; }
  int n_plus() const { return n_plus_; }
  int n_minus() const { return n_minus_; }
  int num_crossings() const { return n_plus_ + n_minus_; }
  bool closed() const { return bottom_ == 0 && top() == 0; }

  MorsePresentation cut(int m) const;
  bool operator==(const MorsePresentation& o) const { return bottom_ == o.bottom_ && layers_ == o.layers_; }

 private:
  int bottom_ = 0;
  std::vector<Layer> layers_;
  std::vector<int> widths_{0};
  int n_plus_ = 0;
  int n_minus_ = 0;
};

MorsePresentation parse_braid_word(std::string_view text, int strands);
MorsePresentation torus_braid(int strands, int twists);
MorsePresentation close_braid(const MorsePresentation& braid);
MorsePresentation mirror(const MorsePresentation& p);

// "bottom: <b>" followed by one layer per line ("x 2", "X 1", "cap 1", "cup 3")
MorsePresentation parse_tangle(std::string_view text);
std::string serialize_tangle(const MorsePresentation& p);

// Tokens of a cell word. The numeric values are stable: base * 3 + color.
enum Token : uint8_t {
  Plain0 = 0, Blue0, Red0,
  Plain1, Blue1, Red1,
  PlainDot, BlueDot, RedDot,
};

enum class Color : uint8_t { None = 0, Blue = 1, Red = 2 };

inline int token_base(uint8_t t) { return t / 3; }  // 0, 1, or 2 (= dot)
inline Color token_color(uint8_t t) { return static_cast<Color>(t % 3); }
inline uint8_t make_token(int base, Color c) { return static_cast<uint8_t>(base * 3 + static_cast<int>(c)); }
inline uint8_t recolor(uint8_t t, Color c) { return make_token(token_base(t), c); }

// A cell word stores one byte per layer.
using Word = std::string;

std::string word_to_string(const Word& w);
Word word_from_string(std::string_view s);

// Which smoothing a crossing token produces: horizontal (joins the two lower
// ends and the two upper ends) or vertical (identity).
bool is_horizontal(LayerKind k, int base);

struct LoopInfo {
  int max_layer;
  int root;
};

// Result of scanning a word bottom to top.
struct PlanarState {
  // arc pairing of boundary points: bottom points are 0..b-1, top points b..b+t-1
  std::vector<int> arc_partner;
  std::vector<LoopInfo> loops;
  std::vector<int8_t> closes_loop;  // per layer (0-based index), 1 when the layer closes a loop
  // per layer: the union-find roots of the two pieces of the layer. For cups and
  // caps both entries coincide. For non-crossing layers they are informational.
  std::vector<std::pair<int, int>> pieces;
  std::vector<int> root_loop_max;  // indexed by root id: max layer of the loop, or -1 for arcs
  std::vector<int> top_nodes;      // root of each top endpoint
  std::vector<int> end_roots;      // root of every boundary point, bottom first
  // root of the loop closed at a layer (0-based), -1 when the layer closes nothing
  int loop_root_at(int layer0) const {
    for (const auto& lp : loops)
      if (lp.max_layer == layer0 + 1) return lp.root;
    return -1;
  }
};

// Scan the underlying (uncolored) resolution. Tokens only matter through their base.
PlanarState scan(const MorsePresentation& p, const Word& w);

// Full resolve: scan + validate token kinds and color placement.
PlanarState resolve(const MorsePresentation& p, const Word& w);

// Check that tokens fit the layer kinds and colors sit exactly on loop-closing layers.
void validate_cell(const MorsePresentation& p, const Word& w, const PlanarState& st);

std::vector<Word> expand(const MorsePresentation& p, const std::vector<Word>& prefixes);
std::vector<Word> all_cells(const MorsePresentation& p);

struct Grading {
  int h;
  int q;
  bool operator==(const Grading&) const = default;
};

Grading gradings(const MorsePresentation& p, const Word& w);

}  // namespace kvm
