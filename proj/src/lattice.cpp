#include "perco/lattice.hpp"

#include <algorithm>
#include <cstdlib>

namespace perco {

std::string to_string(Mode m) { return m == Mode::Site ? "site" : "bond"; }
std::string to_string(Variant v) { return v == Variant::Square ? "square" : "triangular"; }

Mode parse_mode(const std::string& s) {
  if (s == "site") return Mode::Site;
  if (s == "bond") return Mode::Bond;
  throw std::invalid_argument("unknown mode '" + s + "' (expected site or bond)");
}

Variant parse_variant(const std::string& s) {
  if (s == "square") return Variant::Square;
  if (s == "triangular") return Variant::Triangular;
  throw std::invalid_argument("unknown variant '" + s + "' (expected square or triangular)");
}

MeshSpec::MeshSpec(int l, Mode mode, Variant variant) : l_(l), mode_(mode), variant_(variant) {
  if (l < 2) throw std::invalid_argument("mesh parameter l must be >= 2, got " + std::to_string(l));
  if (variant == Variant::Triangular && mode != Mode::Site)
    throw std::invalid_argument("the triangular variant is a site model");
}

Relation closed_relation(Variant v) {
  return v == Variant::Square ? Relation::Circle : Relation::Bullet;
}

const std::vector<Site>& relation_offsets(Relation relation, Variant variant) {
  static const std::vector<Site> bullet{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  static const std::vector<Site> triangular{{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}};
  static const std::vector<Site> circle{{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                                        {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
  if (relation == Relation::Circle) return circle;
  return variant == Variant::Triangular ? triangular : bullet;
}

// ---------------------------------------------------------------------------

LatticeGraph::LatticeGraph(MeshSpec mesh, Window window, std::size_t vertex_budget)
    : mesh_(mesh), window_(window) {
  if (window.i_max <= window.i_min || window.j_max <= window.j_min)
    throw std::invalid_argument("lattice window must span at least one step in each direction");
  const auto w = static_cast<std::size_t>(window.width());
  const auto h = static_cast<std::size_t>(window.height());
  vertex_count_ = w * h;
  if (vertex_count_ > vertex_budget)
    throw std::invalid_argument("window of " + std::to_string(vertex_count_) +
                                " vertices exceeds the budget of " +
                                std::to_string(vertex_budget));
  horizontal_count_ = (w - 1) * h;
  vertical_count_ = w * (h - 1);
}

std::size_t LatticeGraph::face_count() const {
  return static_cast<std::size_t>(window_.width() - 1) *
         static_cast<std::size_t>(window_.height() - 1);
}

std::optional<int> LatticeGraph::edge_between(Site a, Site b) const {
  if (!window_.contains(a.i, a.j) || !window_.contains(b.i, b.j)) return std::nullopt;
  if (b.i < a.i || b.j < a.j) std::swap(a, b);
  const int w = window_.width();
  if (b.j == a.j && b.i == a.i + 1)
    return (a.j - window_.j_min) * (w - 1) + (a.i - window_.i_min);
  if (b.i == a.i && b.j == a.j + 1)
    return static_cast<int>(horizontal_count_) + (a.j - window_.j_min) * w + (a.i - window_.i_min);
  return std::nullopt;
}

std::array<Site, 2> LatticeGraph::edge_sites(int e) const {
  const int w = window_.width();
  if (static_cast<std::size_t>(e) < horizontal_count_) {
    const Site a{window_.i_min + e % (w - 1), window_.j_min + e / (w - 1)};
    return {a, Site{a.i + 1, a.j}};
  }
  const int k = e - static_cast<int>(horizontal_count_);
  const Site a{window_.i_min + k % w, window_.j_min + k / w};
  return {a, Site{a.i, a.j + 1}};
}

std::optional<int> LatticeGraph::find_face(int i, int j) const {
  if (i < window_.i_min || i >= window_.i_max || j < window_.j_min || j >= window_.j_max)
    return std::nullopt;
  return face_id(i, j);
}

std::vector<int> LatticeGraph::neighbors(int v, Relation relation) const {
  const Site s = site(v);
  std::vector<int> out;
  for (const Site& d : relation_offsets(relation, mesh_.variant()))
    if (auto u = find_vertex(s.i + d.i, s.j + d.j)) out.push_back(*u);
  return out;
}

bool LatticeGraph::adjacent(Site a, Site b, Relation relation) const {
  for (const Site& d : relation_offsets(relation, mesh_.variant()))
    if (a.i + d.i == b.i && a.j + d.j == b.j) return true;
  return false;
}

// ---------------------------------------------------------------------------

TriangleDomain::TriangleDomain(Point a, Point b, Point c, Rational split)
    : a_(a), b_(b), c_(c), split_(split) {
  if (a.y != b.y || !(a.x < b.x))
    throw std::invalid_argument("triangle side AB must be horizontal with A left of B");
  if (!(c.y > a.y)) throw std::invalid_argument("triangle corner C must lie above AB");
  if (split < Rational(0) || split > Rational(1)) throw std::invalid_argument("split point X must lie on AB");
}

TriangleDomain TriangleDomain::isosceles(Rational split) {
  return {{0, 0}, {1, 0}, {Rational(1, 2), Rational(1, 2)}, split};
}

TriangleDomain TriangleDomain::equilateral_sheared(Rational split) {
  return {{0, 0}, {1, 0}, {1, 1}, split};
}

Point TriangleDomain::x() const { return {a_.x + split_ * (b_.x - a_.x), a_.y}; }

TriangleDomain TriangleDomain::with_split(Rational split) const {
  TriangleDomain d = *this;
  if (split < Rational(0) || split > Rational(1)) throw std::invalid_argument("split point X must lie on AB");
  d.split_ = split;
  return d;
}

TriangleDomain shift_domain(const TriangleDomain& d, TriangleShift op, const MeshSpec& mesh) {
  const Rational step(1, mesh.l());
  Rational dx{0}, dy{0};
  int dh = 0, dv = 0;
  switch (op) {
    case TriangleShift::RightTau: dx = step; dh = 1; break;
    case TriangleShift::LeftTau: dx = -step; dh = -1; break;
    case TriangleShift::UpRho: dy = step; dv = 1; break;
    case TriangleShift::DownRho: dy = -step; dv = -1; break;
  }
  TriangleDomain out = d;
  for (Point* p : {&out.a_, &out.b_, &out.c_}) {
    p->x += dx;
    p->y += dy;
  }
  out.shift_[0] += dh;
  out.shift_[1] += dv;
  return out;
}

namespace {

// Intersection of the horizontal line y = h with segment p-q (p.y != q.y).
Point at_height(const Point& p, const Point& q, Rational h) {
  const Rational t = (h - p.y) / (q.y - p.y);
  return {p.x + t * (q.x - p.x), h};
}

std::int64_t to_doubled(Rational v, int l, const char* what) {
  const Rational s = v * Rational(2 * l);
  if (s.denominator() != 1)
    throw std::invalid_argument(std::string("domain corner ") + what +
                                " is not on the half-lattice of mesh l=" + std::to_string(l));
  return s.numerator();
}

}  // namespace

TriangleDomain upper_subtriangle(const TriangleDomain& d, const MeshSpec& mesh) {
  const Rational h = d.a().y + Rational(1, mesh.l());
  if (!(h < d.c().y)) throw std::invalid_argument("triangle too small for a sub-triangle");
  return {at_height(d.a(), d.c(), h), at_height(d.b(), d.c(), h), d.c(), d.split()};
}

DoubledTriangle doubled_corners(const TriangleDomain& d, const MeshSpec& mesh) {
  const int l = mesh.l();
  return {{to_doubled(d.a().x, l, "A"), to_doubled(d.a().y, l, "A")},
          {to_doubled(d.b().x, l, "B"), to_doubled(d.b().y, l, "B")},
          {to_doubled(d.c().x, l, "C"), to_doubled(d.c().y, l, "C")}};
}

int ab_steps(const TriangleDomain& d, const MeshSpec& mesh) {
  const auto c = doubled_corners(d, mesh);
  if (c.a[0] % 2 != 0 || c.a[1] % 2 != 0 || c.b[0] % 2 != 0)
    throw std::invalid_argument("corners A and B must be lattice points");
  return static_cast<int>((c.b[0] - c.a[0]) / 2);
}

int snapped_split(const TriangleDomain& d, const MeshSpec& mesh) {
  const Rational pos = d.split() * Rational(ab_steps(d, mesh));
  const Rational shifted = pos + Rational(1, 2);
  // floor for a non-negative rational
  return static_cast<int>(shifted.numerator() / shifted.denominator());
}

Window domain_window(const TriangleDomain& d, const MeshSpec& mesh) {
  const auto c = doubled_corners(d, mesh);
  auto floor_half = [](std::int64_t v) { return static_cast<int>(v >= 0 ? v / 2 : -((-v + 1) / 2)); };
  auto ceil_half = [](std::int64_t v) { return static_cast<int>(v >= 0 ? (v + 1) / 2 : -((-v) / 2)); };
  const std::int64_t xmin = std::min({c.a[0], c.b[0], c.c[0]});
  const std::int64_t xmax = std::max({c.a[0], c.b[0], c.c[0]});
  const std::int64_t ymin = std::min({c.a[1], c.b[1], c.c[1]});
  const std::int64_t ymax = std::max({c.a[1], c.b[1], c.c[1]});
  return {floor_half(xmin) - 1, ceil_half(xmax) + 1, floor_half(ymin) - 1, ceil_half(ymax) + 1};
}

LatticeGraph build_lattice(const MeshSpec& mesh, const TriangleDomain& d, std::size_t budget) {
  return build_lattice(mesh, std::vector<TriangleDomain>{d}, budget);
}

LatticeGraph build_lattice(const MeshSpec& mesh, const std::vector<TriangleDomain>& ds,
                           std::size_t budget) {
  if (ds.empty()) throw std::invalid_argument("build_lattice needs at least one domain");
  Window w = domain_window(ds.front(), mesh);
  for (const auto& d : ds) {
    ab_steps(d, mesh);  // validates lattice alignment of A and B
    const Window o = domain_window(d, mesh);
    w = {std::min(w.i_min, o.i_min), std::max(w.i_max, o.i_max),
         std::min(w.j_min, o.j_min), std::max(w.j_max, o.j_max)};
  }
  return LatticeGraph(mesh, w, budget);
}

LatticeGraph build_box_lattice(const MeshSpec& mesh, int half, int margin) {
  if (half < 1 || margin < 0) throw std::invalid_argument("box half-width must be >= 1");
  const int h = half + margin;
  return LatticeGraph(mesh, Window{-h, h, -h, h});
}

// ---------------------------------------------------------------------------

namespace {

using P2 = std::array<std::int64_t, 2>;

std::int64_t cross(P2 a, P2 b) { return a[0] * b[1] - a[1] * b[0]; }
std::int64_t dot(P2 a, P2 b) { return a[0] * b[0] + a[1] * b[1]; }
P2 sub(P2 a, P2 b) { return {a[0] - b[0], a[1] - b[1]}; }

// Intersection of segment [p, q] with segment [s0, s1], as a parameter
// interval along the latter.
std::optional<SideHit> segment_hit(P2 s0, P2 s1, P2 p, P2 q) {
  const P2 d = sub(s1, s0);
  const P2 e = sub(q, p);
  const P2 w = sub(p, s0);
  const std::int64_t den = cross(d, e);
  if (den != 0) {
    Rational t(cross(w, e), den);
    Rational s(cross(w, d), den);
    if (t < Rational(0) || t > Rational(1) || s < Rational(0) || s > Rational(1)) return std::nullopt;
    return SideHit{t, t};
  }
  if (cross(d, w) != 0) return std::nullopt;  // parallel, not collinear
  const std::int64_t dd = dot(d, d);
  Rational tp(dot(w, d), dd);
  Rational tq(dot(sub(q, s0), d), dd);
  Rational lo = std::max(std::min(tp, tq), Rational(0));
  Rational hi = std::min(std::max(tp, tq), Rational(1));
  if (lo > hi) return std::nullopt;
  return SideHit{lo, hi};
}

}  // namespace

bool ArcSpan::meets(const BoundaryHits& hits) const {
  if (empty) return false;
  const auto& h = hits.side[static_cast<int>(side)];
  if (!h) return false;
  const Rational lo = std::max(h->lo, t0);
  const Rational hi = std::min(h->hi, t1);
  if (lo < hi) return true;
  if (lo > hi) return false;
  const bool after_start = lo > t0 || closed0;
  const bool before_end = lo < t1 || closed1;
  return after_start && before_end;
}

TriangleGeometry::TriangleGeometry(const TriangleDomain& d, const MeshSpec& mesh)
    : corners_(doubled_corners(d, mesh)),
      ab_steps_(perco::ab_steps(d, mesh)),
      split_(snapped_split(d, mesh)) {}

bool TriangleGeometry::interior2(std::int64_t x2, std::int64_t y2) const {
  const P2 p{x2, y2};
  const auto& c = corners_;
  return cross(sub(c.b, c.a), sub(p, c.a)) > 0 && cross(sub(c.c, c.b), sub(p, c.b)) > 0 &&
         cross(sub(c.a, c.c), sub(p, c.c)) > 0;
}

bool TriangleGeometry::closed2(std::int64_t x2, std::int64_t y2) const {
  const P2 p{x2, y2};
  const auto& c = corners_;
  return cross(sub(c.b, c.a), sub(p, c.a)) >= 0 && cross(sub(c.c, c.b), sub(p, c.b)) >= 0 &&
         cross(sub(c.a, c.c), sub(p, c.c)) >= 0;
}

BoundaryHits TriangleGeometry::hits2(P2 p, P2 q) const {
  const auto& c = corners_;
  BoundaryHits h;
  h.side[0] = segment_hit(c.a, c.b, p, q);
  h.side[1] = segment_hit(c.b, c.c, p, q);
  h.side[2] = segment_hit(c.c, c.a, p, q);
  return h;
}

ArcSpan TriangleGeometry::arc(Arc which) const {
  const Rational tx(split_, ab_steps_);
  switch (which) {
    case Arc::AX: return {Side::AB, Rational(0), tx, true, true, false};
    case Arc::XB: return {Side::AB, tx, Rational(1), false, true, tx == Rational(1)};
    case Arc::BC: return {Side::BC, Rational(0), Rational(1), false, true, false};
    case Arc::CA: return {Side::CA, Rational(0), Rational(1), false, false, false};
  }
  throw std::logic_error("unknown arc");
}

ArcSpan TriangleGeometry::ab_span(Rational from, Rational to, bool closed0, bool closed1) const {
  ArcSpan s{Side::AB, from / Rational(ab_steps_), to / Rational(ab_steps_), closed0, closed1, false};
  s.empty = s.t0 > s.t1 || (s.t0 == s.t1 && !(closed0 && closed1));
  return s;
}

std::uint8_t arcs_met(const TriangleGeometry& g, Site u, Site v) {
  const BoundaryHits h = g.hits(u, v);
  std::uint8_t mask = 0;
  for (int k = 0; k < 4; ++k)
    if (g.arc(static_cast<Arc>(k)).meets(h)) mask |= static_cast<std::uint8_t>(1u << k);
  return mask;
}

BoundaryMap classify_boundary(const LatticeGraph& graph, const TriangleDomain& d) {
  const TriangleGeometry g(d, graph.mesh());
  BoundaryMap map;
  map.vertex.resize(graph.vertex_count());
  for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
    const Site s = graph.site(static_cast<int>(v));
    if (g.interior(s)) {
      map.vertex[v] = VertexClass::Interior;
    } else if (!g.closed2(2 * s.i, 2 * s.j)) {
      map.vertex[v] = VertexClass::Exterior;
    } else {
      const std::uint8_t m = arcs_met(g, s, s);
      int k = 0;
      while (k < 4 && !(m & (1u << k))) ++k;
      map.vertex[v] = static_cast<VertexClass>(static_cast<int>(VertexClass::OnArcAX) + k);
    }
  }
  map.edge_arcs.resize(graph.edge_count());
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const auto ends = graph.edge_sites(static_cast<int>(e));
    map.edge_arcs[e] = arcs_met(g, ends[0], ends[1]);
  }
  return map;
}

}  // namespace perco
