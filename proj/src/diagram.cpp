#include "diagram.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

namespace kvm {

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotABraid: return "NotABraid";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ColorPlacementError: return "ColorPlacementError";
    case ErrorCode::NotClosed: return "NotClosed";
    case ErrorCode::BadBasepoint: return "BadBasepoint";
    case ErrorCode::MatchingNotAcyclic: return "MatchingNotAcyclic";
    case ErrorCode::RecursionDepthExceeded: return "RecursionDepthExceeded";
    case ErrorCode::NonUniqueIsoPair: return "NonUniqueIsoPair";
    case ErrorCode::InvertNonIso: return "InvertNonIso";
    case ErrorCode::PatternAbsent: return "PatternAbsent";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

MorsePresentation::MorsePresentation(int bottom, std::vector<Layer> layers)
    : bottom_(bottom), layers_(std::move(layers)) {
  if (bottom_ < 0) throw Error(ErrorCode::IndexOutOfRange, "negative strand count");
  widths_.assign(1, bottom_);
  int w = bottom_;
  for (size_t i = 0; i < layers_.size(); ++i) {
    const Layer& L = layers_[i];
    const bool ok = L.kind == LayerKind::Cup ? (L.pos >= 1 && L.pos <= w + 1)
                                             : (L.pos >= 1 && L.pos + 1 <= w);
    if (!ok)
      throw Error(ErrorCode::IndexOutOfRange,
                  "layer " + std::to_string(i + 1) + " position " + std::to_string(L.pos) +
                      " does not fit width " + std::to_string(w));
    switch (L.kind) {
      case LayerKind::Positive: ++n_plus_; break;
      case LayerKind::Negative: ++n_minus_; break;
      case LayerKind::Cap: w -= 2; break;
      case LayerKind::Cup: w += 2; break;
    }
    widths_.push_back(w);
  }
}

MorsePresentation MorsePresentation::cut(int m) const {
  return MorsePresentation(bottom_, std::vector<Layer>(layers_.begin(), layers_.begin() + m));
}

static int parse_int(std::string_view tok) {
  int v = 0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw Error(ErrorCode::ParseError, "not an integer: '" + std::string(tok) + "'");
  return v;
}

static std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

MorsePresentation parse_braid_word(std::string_view text, int strands) {
  if (strands < 1) throw Error(ErrorCode::IndexOutOfRange, "strand count must be positive");
  std::vector<Layer> layers;
  for (auto tok : split_ws(text)) {
    int g = parse_int(tok);
    if (g == 0) throw Error(ErrorCode::ParseError, "braid generator 0 is not allowed");
    if (std::abs(g) >= strands)
      throw Error(ErrorCode::IndexOutOfRange,
                  "generator " + std::to_string(g) + " needs more than " + std::to_string(strands) + " strands");
    layers.push_back({g > 0 ? LayerKind::Positive : LayerKind::Negative, std::abs(g)});
  }
  return MorsePresentation(strands, std::move(layers));
}

MorsePresentation torus_braid(int strands, int twists) {
  std::vector<Layer> layers;
  const LayerKind k = twists >= 0 ? LayerKind::Positive : LayerKind::Negative;
  for (int r = 0; r < std::abs(twists); ++r)
    for (int i = 1; i < strands; ++i) layers.push_back({k, i});
  return MorsePresentation(strands, std::move(layers));
}

MorsePresentation close_braid(const MorsePresentation& braid) {
  const int s = braid.bottom();
  if (braid.top() != s) throw Error(ErrorCode::NotABraid, "bottom and top widths differ");
  for (const auto& L : braid.layers())
    if (!L.is_crossing()) throw Error(ErrorCode::NotABraid, "braid closure needs a crossing-only presentation");
  std::vector<Layer> layers;
  // concentric cups: the first one is outermost
  for (int i = 1; i <= s; ++i) layers.push_back({LayerKind::Cup, i});
  for (const auto& L : braid.layers()) layers.push_back({L.kind, L.pos + s});
  for (int i = s; i >= 1; --i) layers.push_back({LayerKind::Cap, i});
  return MorsePresentation(0, std::move(layers));
}

MorsePresentation mirror(const MorsePresentation& p) {
  std::vector<Layer> layers = p.layers();
  for (auto& L : layers) {
    if (L.kind == LayerKind::Positive) L.kind = LayerKind::Negative;
    else if (L.kind == LayerKind::Negative) L.kind = LayerKind::Positive;
  }
  return MorsePresentation(p.bottom(), std::move(layers));
}

MorsePresentation parse_tangle(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int bottom = -1;
  std::vector<Layer> layers;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (bottom < 0) {
      if (toks.size() != 2 || toks[0] != "bottom:")
        throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected 'bottom: <int>'");
      bottom = parse_int(toks[1]);
      continue;
    }
    if (toks.size() != 2) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected '<kind> <pos>'");
    LayerKind k;
    if (toks[0] == "x") k = LayerKind::Negative;
    else if (toks[0] == "X") k = LayerKind::Positive;
    else if (toks[0] == "cap") k = LayerKind::Cap;
    else if (toks[0] == "cup") k = LayerKind::Cup;
    else throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": unknown layer '" + std::string(toks[0]) + "'");
    layers.push_back({k, parse_int(toks[1])});
  }
  if (bottom < 0) throw Error(ErrorCode::ParseError, "missing 'bottom:' header");
  return MorsePresentation(bottom, std::move(layers));
}

std::string serialize_tangle(const MorsePresentation& p) {
  std::string out = "bottom: " + std::to_string(p.bottom()) + "\n";
  for (const auto& L : p.layers()) {
    switch (L.kind) {
      case LayerKind::Negative: out += "x "; break;
      case LayerKind::Positive: out += "X "; break;
      case LayerKind::Cap: out += "cap "; break;
      case LayerKind::Cup: out += "cup "; break;
    }
    out += std::to_string(L.pos) + "\n";
  }
  return out;
}

std::string word_to_string(const Word& w) {
  static const char* names[] = {"0", "0b", "0r", "1", "1b", "1r", ".", ".b", ".r"};
  std::string s;
  for (unsigned char t : w) {
    if (t > 8) throw Error(ErrorCode::Internal, "bad token byte");
    s += names[t];
  }
  return s;
}

Word word_from_string(std::string_view s) {
  Word w;
  for (size_t i = 0; i < s.size(); ++i) {
    int base;
    if (s[i] == '0') base = 0;
    else if (s[i] == '1') base = 1;
    else if (s[i] == '.') base = 2;
    else if (std::isspace(static_cast<unsigned char>(s[i]))) continue;
    else throw Error(ErrorCode::ParseError, "bad cell word character '" + std::string(1, s[i]) + "'");
    Color c = Color::None;
    if (i + 1 < s.size() && (s[i + 1] == 'b' || s[i + 1] == 'r')) {
      c = s[i + 1] == 'b' ? Color::Blue : Color::Red;
      ++i;
    }
    w.push_back(static_cast<char>(make_token(base, c)));
  }
  return w;
}

bool is_horizontal(LayerKind k, int base) {
  // negative crossing: 0 is horizontal; positive crossing: 1 is horizontal
  return k == LayerKind::Negative ? base == 0 : base == 1;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  int add() {
    parent.push_back(static_cast<int>(parent.size()));
    return parent.back();
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // returns false when x and y were already joined
  bool unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    if (x < y) std::swap(x, y);
    parent[x] = y;
    return true;
  }
};

}  // namespace

PlanarState scan(const MorsePresentation& p, const Word& w) {
  const int m = static_cast<int>(w.size());
  if (m > p.num_layers()) throw Error(ErrorCode::ShapeMismatch, "word longer than presentation");
  PlanarState st;
  UnionFind uf;
  std::vector<int> cur;
  for (int i = 0; i < p.bottom(); ++i) cur.push_back(uf.add());
  st.closes_loop.assign(m, 0);
  st.pieces.resize(m);
  std::vector<std::pair<int, int>> closed;  // (layer, node)
  for (int l = 1; l <= m; ++l) {
    const Layer& L = p.layer(l);
    const int p0 = L.pos - 1;
    const int base = token_base(static_cast<uint8_t>(w[l - 1]));
    switch (L.kind) {
      case LayerKind::Positive:
      case LayerKind::Negative:
        if (is_horizontal(L.kind, base)) {
          const int a = cur[p0], b = cur[p0 + 1];
          if (!uf.unite(a, b)) {
            st.closes_loop[l - 1] = 1;
            closed.push_back({l, a});
          }
          const int z = uf.add();
          cur[p0] = cur[p0 + 1] = z;
          st.pieces[l - 1] = {a, z};
        } else {
          st.pieces[l - 1] = {cur[p0], cur[p0 + 1]};
        }
        break;
      case LayerKind::Cap: {
        const int a = cur[p0], b = cur[p0 + 1];
        if (!uf.unite(a, b)) {
          st.closes_loop[l - 1] = 1;
          closed.push_back({l, a});
        }
        cur.erase(cur.begin() + p0, cur.begin() + p0 + 2);
        st.pieces[l - 1] = {a, a};
        break;
      }
      case LayerKind::Cup: {
        const int z = uf.add();
        cur.insert(cur.begin() + p0, 2, z);
        st.pieces[l - 1] = {z, z};
        break;
      }
    }
  }
  for (auto& pc : st.pieces) pc = {uf.find(pc.first), uf.find(pc.second)};
  st.root_loop_max.assign(uf.parent.size(), -1);
  for (auto [l, node] : closed) {
    const int r = uf.find(node);
    st.loops.push_back({l, r});
    st.root_loop_max[r] = l;
  }
  const int b = p.bottom();
  const int t = static_cast<int>(cur.size());
  st.top_nodes.resize(t);
  std::vector<int> ends;  // root per boundary point
  for (int i = 0; i < b; ++i) ends.push_back(uf.find(i));
  for (int j = 0; j < t; ++j) {
    st.top_nodes[j] = uf.find(cur[j]);
    ends.push_back(st.top_nodes[j]);
  }
  st.end_roots = ends;
  st.arc_partner.assign(b + t, -1);
  std::vector<int> first(uf.parent.size(), -1);
  for (int e = 0; e < b + t; ++e) {
    int r = ends[e];
    if (first[r] < 0) {
      first[r] = e;
    } else {
      st.arc_partner[e] = first[r];
      st.arc_partner[first[r]] = e;
    }
  }
  return st;
}

void validate_cell(const MorsePresentation& p, const Word& w, const PlanarState& st) {
  for (size_t i = 0; i < w.size(); ++i) {
    const auto t = static_cast<uint8_t>(w[i]);
    if (t > 8) throw Error(ErrorCode::ShapeMismatch, "bad token byte");
    const bool crossing = p.layer(static_cast<int>(i) + 1).is_crossing();
    if (crossing != (token_base(t) != 2))
      throw Error(ErrorCode::ShapeMismatch, "token kind does not match layer " + std::to_string(i + 1));
    const bool colored = token_color(t) != Color::None;
    if (colored != (st.closes_loop[i] != 0))
      throw Error(ErrorCode::ColorPlacementError,
                  colored ? "color at layer " + std::to_string(i + 1) + " which closes no loop"
                          : "missing color at loop-closing layer " + std::to_string(i + 1));
  }
}

PlanarState resolve(const MorsePresentation& p, const Word& w) {
  if (static_cast<int>(w.size()) != p.num_layers())
    throw Error(ErrorCode::ShapeMismatch, "word length differs from the number of layers");
  for (size_t i = 0; i < w.size(); ++i) {
    const auto t = static_cast<uint8_t>(w[i]);
    if (t > 8 || p.layer(static_cast<int>(i) + 1).is_crossing() != (token_base(t) != 2))
      throw Error(ErrorCode::ShapeMismatch, "token kind does not match layer " + std::to_string(i + 1));
  }
  PlanarState st = scan(p, w);
  validate_cell(p, w, st);
  return st;
}

std::vector<Word> expand(const MorsePresentation& p, const std::vector<Word>& prefixes) {
  std::vector<Word> out;
  for (const Word& w : prefixes) {
    const int m = static_cast<int>(w.size());
    if (m >= p.num_layers()) throw Error(ErrorCode::ShapeMismatch, "cannot expand a complete word");
    const PlanarState st = scan(p, w);
    const Layer& L = p.layer(m + 1);
    const int p0 = L.pos - 1;
    auto emit = [&](int base, bool closes) {
      if (closes) {
        out.push_back(w + static_cast<char>(make_token(base, Color::Blue)));
        out.push_back(w + static_cast<char>(make_token(base, Color::Red)));
      } else {
        out.push_back(w + static_cast<char>(make_token(base, Color::None)));
      }
    };
    switch (L.kind) {
      case LayerKind::Positive:
      case LayerKind::Negative:
        for (int base = 0; base < 2; ++base) {
          bool closes = is_horizontal(L.kind, base) && st.top_nodes[p0] == st.top_nodes[p0 + 1];
          emit(base, closes);
        }
        break;
      case LayerKind::Cap:
        emit(2, st.top_nodes[p0] == st.top_nodes[p0 + 1]);
        break;
      case LayerKind::Cup:
        emit(2, false);
        break;
    }
  }
  return out;
}

std::vector<Word> all_cells(const MorsePresentation& p) {
  std::vector<Word> cur{Word{}};
  for (int l = 1; l <= p.num_layers(); ++l) cur = expand(p, cur);
  return cur;
}

Grading gradings(const MorsePresentation& p, const Word& w) {
  int k = 0, red = 0, blue = 0;
  for (unsigned char t : w) {
    if (token_base(t) == 1) ++k;
    if (token_color(t) == Color::Red) ++red;
    if (token_color(t) == Color::Blue) ++blue;
  }
  return {k - p.n_minus(), k + p.n_plus() - 2 * p.n_minus() + red - blue};
}

}  // namespace kvm
