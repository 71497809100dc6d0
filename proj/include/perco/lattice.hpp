#pragma once

#include <boost/rational.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace perco {

using Rational = boost::rational<std::int64_t>;

enum class Mode { Site, Bond };
enum class Variant { Square, Triangular };
enum class Relation { Bullet, Circle };

std::string to_string(Mode m);
std::string to_string(Variant v);
Mode parse_mode(const std::string& s);
Variant parse_variant(const std::string& s);

/// Mesh of the lattice Z^2 scaled by 1/l.  The spacing is never stored as a
/// float: every geometric quantity is kept in integer lattice units.
class MeshSpec {
 public:
  MeshSpec(int l, Mode mode, Variant variant = Variant::Square);

  int l() const { return l_; }
  Rational delta() const { return Rational(1, l_); }
  Mode mode() const { return mode_; }
  Variant variant() const { return variant_; }

  bool operator==(const MeshSpec&) const = default;

 private:
  int l_;
  Mode mode_;
  Variant variant_;
};

/// Closed relation matching the open bullet relation: the circle relation on
/// the square lattice, and the triangular relation itself (self-matching).
Relation closed_relation(Variant v);

struct Window {
  int i_min = 0, i_max = 0, j_min = 0, j_max = 0;

  int width() const { return i_max - i_min + 1; }
  int height() const { return j_max - j_min + 1; }
  bool contains(int i, int j) const {
    return i >= i_min && i <= i_max && j >= j_min && j <= j_max;
  }
  bool operator==(const Window&) const = default;
};

struct Site {
  int i = 0, j = 0;
  bool operator==(const Site&) const = default;
};

/// Finite window of the lattice with dense row-major vertex, edge and face ids.
///
/// Edge ids (bond mode) list all horizontal edges row by row, then all
/// vertical edges row by row.  Faces are the unit squares of the window,
/// indexed row-major by their lower-left corner; they are the vertices of the
/// dual lattice in bond mode.
class LatticeGraph {
 public:
  static constexpr std::size_t kDefaultVertexBudget = 1u << 24;

  LatticeGraph(MeshSpec mesh, Window window,
               std::size_t vertex_budget = kDefaultVertexBudget);

  const MeshSpec& mesh() const { return mesh_; }
  const Window& window() const { return window_; }

  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return horizontal_count_ + vertical_count_; }
  std::size_t face_count() const;
  /// Number of random variables: sites in site mode, bonds in bond mode.
  std::size_t variable_count() const {
    return mesh_.mode() == Mode::Site ? vertex_count() : edge_count();
  }

  int vertex_id(int i, int j) const {
    return (j - window_.j_min) * window_.width() + (i - window_.i_min);
  }
  std::optional<int> find_vertex(int i, int j) const {
    if (!window_.contains(i, j)) return std::nullopt;
    return vertex_id(i, j);
  }
  Site site(int v) const {
    return {window_.i_min + v % window_.width(), window_.j_min + v / window_.width()};
  }

  /// Id of the axis-parallel edge between two bullet-adjacent window sites.
  std::optional<int> edge_between(Site a, Site b) const;
  std::array<Site, 2> edge_sites(int e) const;

  int face_id(int i, int j) const {
    return (j - window_.j_min) * (window_.width() - 1) + (i - window_.i_min);
  }
  std::optional<int> find_face(int i, int j) const;
  /// Lower-left corner of a face.
  Site face_corner(int f) const {
    const int w = window_.width() - 1;
    return {window_.i_min + f % w, window_.j_min + f / w};
  }

  std::vector<int> neighbors(int v, Relation relation) const;
  bool adjacent(Site a, Site b, Relation relation) const;

 private:
  MeshSpec mesh_;
  Window window_;
  std::size_t vertex_count_;
  std::size_t horizontal_count_;
  std::size_t vertical_count_;
};

/// Relation offsets in lattice units.
const std::vector<Site>& relation_offsets(Relation relation, Variant variant);

/// Exact planar point in continuum coordinates.
struct Point {
  Rational x{0}, y{0};
  bool operator==(const Point&) const = default;
};

enum class Arc { AX = 0, XB = 1, BC = 2, CA = 3 };
enum class Side { AB = 0, BC = 1, CA = 2 };
enum class TriangleShift { RightTau, LeftTau, UpRho, DownRho };

/// Triangle A, B, C with AB horizontal and C above it, split point X on AB
/// (stored as the fraction of AB from A), and the accumulated lattice shift.
class TriangleDomain {
 public:
  TriangleDomain(Point a, Point b, Point c, Rational split = Rational(1, 2));

  /// A=0, B=1, C=1/2+i/2.
  static TriangleDomain isosceles(Rational split = Rational(1, 2));
  /// The equilateral triangle of the triangular lattice drawn as a square
  /// lattice with northeast diagonals: C=e^{i pi/3} maps to (1, 1).
  static TriangleDomain equilateral_sheared(Rational split = Rational(1, 2));

  const Point& a() const { return a_; }
  const Point& b() const { return b_; }
  const Point& c() const { return c_; }
  Rational split() const { return split_; }
  Point x() const;
  std::array<int, 2> shift() const { return shift_; }

  TriangleDomain with_split(Rational split) const;

  bool operator==(const TriangleDomain&) const = default;

 private:
  friend TriangleDomain shift_domain(const TriangleDomain&, TriangleShift,
                                     const MeshSpec&);
  Point a_, b_, c_;
  Rational split_;
  std::array<int, 2> shift_{0, 0};
};

TriangleDomain shift_domain(const TriangleDomain& d, TriangleShift op,
                            const MeshSpec& mesh);

/// The triangle cut from `d` by the line one lattice step above AB.
TriangleDomain upper_subtriangle(const TriangleDomain& d, const MeshSpec& mesh);

/// Corners of a domain in doubled lattice units (2 l times continuum
/// coordinates).  Throws if a corner is not on the half-lattice.
struct DoubledTriangle {
  std::array<std::int64_t, 2> a, b, c;
};
DoubledTriangle doubled_corners(const TriangleDomain& d, const MeshSpec& mesh);

/// Number of lattice steps along AB and the snapped split position (lattice
/// steps from A, half rounded up).
int ab_steps(const TriangleDomain& d, const MeshSpec& mesh);
int snapped_split(const TriangleDomain& d, const MeshSpec& mesh);

/// Window covering the domain plus a one-step margin.
Window domain_window(const TriangleDomain& d, const MeshSpec& mesh);

LatticeGraph build_lattice(const MeshSpec& mesh, const TriangleDomain& d,
                           std::size_t vertex_budget = LatticeGraph::kDefaultVertexBudget);
/// Window covering every listed domain.
LatticeGraph build_lattice(const MeshSpec& mesh, const std::vector<TriangleDomain>& ds,
                           std::size_t vertex_budget = LatticeGraph::kDefaultVertexBudget);
/// Square window [-half, half]^2 padded by `margin`.
LatticeGraph build_box_lattice(const MeshSpec& mesh, int half, int margin = 1);

// ---------------------------------------------------------------------------
// Boundary geometry.

/// Parameter interval [lo, hi] along one side of the triangle (0 at the
/// side's first corner).
struct SideHit {
  Rational lo, hi;
};

/// Where a segment meets each side of the triangle.
struct BoundaryHits {
  std::array<std::optional<SideHit>, 3> side;
  bool any() const { return side[0] || side[1] || side[2]; }
};

/// A piece of one side: the parameter range [t0, t1] with each end open or
/// closed.  An empty range never meets anything.
struct ArcSpan {
  Side side = Side::AB;
  Rational t0{0}, t1{1};
  bool closed0 = true, closed1 = true;
  bool empty = false;

  bool meets(const BoundaryHits& hits) const;
};

/// Geometry of a domain at a given mesh, in doubled lattice units.
class TriangleGeometry {
 public:
  TriangleGeometry(const TriangleDomain& d, const MeshSpec& mesh);

  /// Strictly inside the open triangle (lattice units, possibly half-integer
  /// when doubled coordinates are odd).
  bool interior2(std::int64_t x2, std::int64_t y2) const;
  bool interior(Site s) const { return interior2(2 * s.i, 2 * s.j); }
  /// Inside or on the boundary.
  bool closed2(std::int64_t x2, std::int64_t y2) const;

  BoundaryHits hits2(std::array<std::int64_t, 2> p, std::array<std::int64_t, 2> q) const;
  BoundaryHits hits(Site u, Site v) const {
    return hits2({2 * u.i, 2 * u.j}, {2 * v.i, 2 * v.j});
  }

  /// The four arcs AX, XB, BC, CA partition the boundary.  Corners go to the
  /// first arc in that order that contains them.
  ArcSpan arc(Arc a) const;
  /// Sub-segment of AB between lattice offsets `from` and `to` (from A), with
  /// the given end inclusion.
  ArcSpan ab_span(Rational from, Rational to, bool closed0, bool closed1) const;

  int ab_steps() const { return ab_steps_; }
  int split() const { return split_; }
  const DoubledTriangle& corners() const { return corners_; }

 private:
  DoubledTriangle corners_;
  int ab_steps_;
  int split_;
};

enum class VertexClass { Interior, Exterior, OnArcAX, OnArcXB, OnArcBC, OnArcCA };

/// Per-vertex and per-edge classification of a window against a domain.
struct BoundaryMap {
  std::vector<VertexClass> vertex;
  /// For each axis-parallel edge id, bit k set iff the closed edge meets arc k.
  std::vector<std::uint8_t> edge_arcs;
};

std::uint8_t arcs_met(const TriangleGeometry& g, Site u, Site v);
BoundaryMap classify_boundary(const LatticeGraph& graph, const TriangleDomain& d);

}  // namespace perco
