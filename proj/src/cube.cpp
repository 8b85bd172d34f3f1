#include "cube.hpp"

#include <algorithm>

namespace kvm {

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Zero: return "zero";
    case EdgeKind::Iso: return "iso";
    case EdgeKind::Dot: return "dot";
    case EdgeKind::Saddle: return "saddle";
  }
  return "?";
}

int edge_sign(const Word& a, int layer) {
  int k = 0;
  for (int t = 0; t < layer - 1; ++t)
    if (token_base(static_cast<uint8_t>(a[t])) == 1) ++k;
  return (k % 2) ? -1 : 1;
}

namespace {

struct Comp {
  bool loop;
  Color color;
  int max_layer;
  int root;
};

Comp comp_of(const PlanarState& st, const Word& w, int root) {
  const int m = st.root_loop_max[root];
  if (m < 0) return {false, Color::None, -1, root};
  return {true, token_color(static_cast<uint8_t>(w[m - 1])), m, root};
}

int end_of_root(const PlanarState& st, int root) {
  for (size_t e = 0; e < st.end_roots.size(); ++e)
    if (st.end_roots[e] == root) return static_cast<int>(e);
  return -1;
}

// The saddle at `layer` turns source (scan sa) into target (scan sb).
EdgeClass classify_saddle(const Word& a, const PlanarState& sa, const Word& b, const PlanarState& sb, int layer) {
  EdgeClass ec;
  ec.i = layer;
  ec.sign = edge_sign(a, layer);
  const auto [ra1, ra2] = sa.pieces[layer - 1];
  const auto [rb1, rb2] = sb.pieces[layer - 1];
  std::vector<Comp> ca{comp_of(sa, a, ra1)};
  if (ra2 != ra1) ca.push_back(comp_of(sa, a, ra2));
  std::vector<Comp> cb{comp_of(sb, b, rb1)};
  if (rb2 != rb1) cb.push_back(comp_of(sb, b, rb2));

  auto set_iso = [&](int u) {
    ec.kind = EdgeKind::Iso;
    ec.u = u;
  };
  if (ca.size() == 2 && cb.size() == 1) {
    ec.shape = SaddleShape::Merge;
    const Comp& x = ca[0];
    const Comp& y = ca[1];
    const Comp& z = cb[0];
    if (x.loop && y.loop) {
      // z is a loop as well
      const bool xr = x.color == Color::Red, yr = y.color == Color::Red;
      if (xr && yr && z.color == Color::Red) set_iso(std::min(x.max_layer, y.max_layer));
      else if (xr && y.color == Color::Blue && z.color == Color::Blue) set_iso(x.max_layer);
      else if (yr && x.color == Color::Blue && z.color == Color::Blue) set_iso(y.max_layer);
    } else if (x.loop || y.loop) {
      const Comp& l = x.loop ? x : y;
      const Comp& arc = x.loop ? y : x;
      if (l.color == Color::Red) {
        set_iso(l.max_layer);
      } else {
        ec.kind = EdgeKind::Dot;
        ec.dot_end = end_of_root(sa, arc.root);
      }
    } else {
      throw Error(ErrorCode::Internal, "two arcs cannot merge into one component");
    }
  } else if (ca.size() == 1 && cb.size() == 2) {
    ec.shape = SaddleShape::Split;
    const Comp& z = ca[0];
    const Comp& x = cb[0];
    const Comp& y = cb[1];
    if (z.loop) {
      if (z.color == Color::Red) {
        if (x.color == Color::Red && y.color == Color::Blue) set_iso(y.max_layer);
        else if (x.color == Color::Blue && y.color == Color::Red) set_iso(x.max_layer);
      } else if (x.color == Color::Blue && y.color == Color::Blue) {
        set_iso(std::min(x.max_layer, y.max_layer));
      }
    } else {
      const Comp& l = x.loop ? x : y;
      if (!l.loop) throw Error(ErrorCode::Internal, "an arc cannot split into two arcs");
      if (l.color == Color::Blue) {
        set_iso(l.max_layer);
      } else {
        ec.kind = EdgeKind::Dot;
        ec.dot_end = end_of_root(sa, z.root);
      }
    }
  } else if (ca.size() == 2 && cb.size() == 2) {
    ec.shape = SaddleShape::Recombine;
    if (ca[0].loop || ca[1].loop || cb[0].loop || cb[1].loop)
      throw Error(ErrorCode::Internal, "recombination saddle must involve arcs only");
    ec.kind = EdgeKind::Saddle;
  } else {
    throw Error(ErrorCode::Internal, "saddle preserves a single component");
  }
  return ec;
}

// Build the colored neighbours of x obtained by flipping `layer`.
void flip_layer(const MorsePresentation& p, const Word& x, const PlanarState& sx, int layer, bool want_out,
                bool want_in, std::vector<Neighbor>& out) {
  const auto tx = static_cast<uint8_t>(x[layer - 1]);
  const int base = token_base(tx);
  if (base == 2) return;
  const bool forward = base == 0;
  if ((forward && !want_out) || (!forward && !want_in)) return;
  Word y = x;
  y[layer - 1] = static_cast<char>(make_token(1 - base, Color::None));
  const PlanarState sy = scan(p, y);
  const auto [rx1, rx2] = sx.pieces[layer - 1];
  const auto [ry1, ry2] = sy.pieces[layer - 1];
  std::vector<int> fresh;  // layers (1-based) of new loops in y
  for (size_t t = 0; t < y.size(); ++t) {
    if (static_cast<int>(t) == layer - 1) continue;
    y[t] = static_cast<char>(make_token(token_base(static_cast<uint8_t>(y[t])), Color::None));
  }
  for (const auto& lp : sy.loops) {
    if (lp.root == ry1 || lp.root == ry2) {
      fresh.push_back(lp.max_layer);
    } else {
      // untouched loop: it exists in x with the same highest layer
      y[lp.max_layer - 1] = static_cast<char>(recolor(static_cast<uint8_t>(y[lp.max_layer - 1]),
                                                       token_color(static_cast<uint8_t>(x[lp.max_layer - 1]))));
    }
  }
  (void)rx1;
  (void)rx2;
  const int combos = 1 << fresh.size();
  for (int mask = 0; mask < combos; ++mask) {
    Word z = y;
    for (size_t f = 0; f < fresh.size(); ++f) {
      const int l = fresh[f];
      z[l - 1] = static_cast<char>(recolor(static_cast<uint8_t>(z[l - 1]), (mask >> f) & 1 ? Color::Red : Color::Blue));
    }
    EdgeClass ec = forward ? classify_saddle(x, sx, z, sy, layer) : classify_saddle(z, sy, x, sx, layer);
    if (ec.kind != EdgeKind::Zero) out.push_back({std::move(z), ec, forward});
  }
}

}  // namespace

EdgeClass classify_edge(const MorsePresentation& p, const Word& a, const Word& b) {
  EdgeClass zero;
  if (a.size() != b.size()) return zero;
  int layer = -1;
  for (size_t t = 0; t < a.size(); ++t) {
    const int ba = token_base(static_cast<uint8_t>(a[t])), bb = token_base(static_cast<uint8_t>(b[t]));
    if (ba == bb) continue;
    if (layer >= 0 || ba != 0 || bb != 1) return zero;
    layer = static_cast<int>(t) + 1;
  }
  if (layer < 0) return zero;
  const PlanarState sa = scan(p, a);
  const PlanarState sb = scan(p, b);
  // loops away from the saddle must be identical, including their colors
  auto untouched_match = [&](const PlanarState& s1, const Word& w1, const PlanarState& s2, const Word& w2) {
    const auto [r1, r2] = s1.pieces[layer - 1];
    for (const auto& lp : s1.loops) {
      if (lp.root == r1 || lp.root == r2) continue;
      if (!s2.closes_loop[lp.max_layer - 1]) return false;
      const int other = s2.loop_root_at(lp.max_layer - 1);
      const auto [q1, q2] = s2.pieces[layer - 1];
      if (other == q1 || other == q2) return false;
      if (token_color(static_cast<uint8_t>(w1[lp.max_layer - 1])) !=
          token_color(static_cast<uint8_t>(w2[lp.max_layer - 1])))
        return false;
    }
    return true;
  };
  if (!untouched_match(sa, a, sb, b) || !untouched_match(sb, b, sa, a)) return zero;
  return classify_saddle(a, sa, b, sb, layer);
}

std::vector<Neighbor> neighbors_at(const MorsePresentation& p, const Word& x, const PlanarState& sx, int layer) {
  std::vector<Neighbor> out;
  flip_layer(p, x, sx, layer, true, true, out);
  return out;
}

std::vector<Neighbor> neighbors(const MorsePresentation& p, const Word& x) {
  std::vector<Neighbor> out;
  const PlanarState sx = scan(p, x);
  for (int l = 1; l <= static_cast<int>(x.size()); ++l) flip_layer(p, x, sx, l, true, true, out);
  return out;
}

std::vector<Neighbor> out_neighbors(const MorsePresentation& p, const Word& x) {
  std::vector<Neighbor> out;
  const PlanarState sx = scan(p, x);
  for (int l = 1; l <= static_cast<int>(x.size()); ++l) flip_layer(p, x, sx, l, true, false, out);
  return out;
}

std::optional<Word> isopair(const MorsePresentation& p, const Word& a, int j, int k) {
  if (j < 1 || j > static_cast<int>(a.size())) return std::nullopt;
  const PlanarState sa = scan(p, a);
  std::optional<Word> found;
  for (auto& nb : neighbors_at(p, a, sa, j)) {
    if (nb.cls.kind != EdgeKind::Iso || nb.cls.u != k) continue;
    if (found) throw Error(ErrorCode::NonUniqueIsoPair, "two iso neighbours of " + word_to_string(a) + " share (i,u)");
    found = std::move(nb.cell);
  }
  return found;
}

}  // namespace kvm
