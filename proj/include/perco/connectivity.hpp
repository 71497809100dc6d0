#pragma once

#include "perco/configuration.hpp"
#include "perco/lattice.hpp"
#include "perco/union_find.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace perco {

/// Open paths use the bullet relation on open sites (open bonds in bond
/// mode).  Closed paths use the matching relation on closed sites, or the
/// dual lattice across closed bonds in bond mode.
enum class Color { Open, Closed };

std::string to_string(Color c);

struct CrossingQuery {
  TriangleDomain domain;
  Arc source = Arc::AX;
  Arc target = Arc::BC;
  Color color = Color::Open;
};

/// Z̄ and Z as lattice offsets from A along AB; z == zbar + 1.
struct TwoArmQuery {
  TriangleDomain domain;
  int zbar = 0;
  int z = 1;
};

/// Path events of one triangle on one lattice window.
///
/// A crossing from arc S to arc T is a path v0 ... vn whose inner vertices
/// v1 ... v(n-1) lie strictly inside the triangle and have the path's colour,
/// whose first edge meets S and whose last edge meets T.  The end vertices
/// are outside (or on) the boundary and their states do not matter.  In bond
/// mode every edge of the path must have the path's colour instead; bonds
/// lying along AB count as closed for both colours, so the dual lattice
/// always passes through them.
///
/// The construction is precomputed once per (lattice, domain); each
/// configuration then costs one union-find pass per colour.
class TriangleEvents {
 public:
  TriangleEvents(std::shared_ptr<const LatticeGraph> graph, const TriangleDomain& domain);

  const LatticeGraph& graph() const { return *graph_; }
  const TriangleDomain& domain() const { return domain_; }
  const TriangleGeometry& geometry() const { return geometry_; }
  int ab_steps() const { return geometry_.ab_steps(); }

  /// Terminal edges of one colour that meet the source and target spans.
  struct Query {
    Color color = Color::Open;
    std::vector<int> source, target;
    /// Boundary-to-boundary edges meeting both spans (paths with n = 1).
    std::vector<int> direct;
  };
  Query compile(Color color, const ArcSpan& source, const ArcSpan& target) const;
  Query compile(Color color, Arc source, Arc target) const;

  /// Cluster labels of one colour in one configuration.
  class Labels {
   public:
    Color color() const { return color_; }

   private:
    friend class TriangleEvents;
    Color color_ = Color::Open;
    const Configuration* config_ = nullptr;
    std::vector<int> root_;
    UnionFind uf_;
    mutable std::vector<std::uint32_t> mark_;
    mutable std::uint32_t epoch_ = 0;
  };
  void label(const Configuration& c, Color color, Labels& out) const;
  bool holds(const Labels& labels, const Query& q) const;
  bool holds(const Configuration& c, const Query& q) const;

  /// Open crossing from BC to the closed arc [A, Z].
  bool separating(const Configuration& c, int z) const;
  /// Closed crossing from the open arc CA to (Z, B]; the complement of
  /// separating() in every site configuration.
  bool dual_blocking(const Configuration& c, int z) const;
  /// Open crossing BC to (Z̄, Z] together with closed crossing CA to (Z̄, Z].
  bool two_arm(const Configuration& c, int zbar, int z) const;

  /// Smallest z in [0, ab_steps] with separating(c, z), or ab_steps + 1.
  int first_separating(const Configuration& c) const;
  int first_separating(const Labels& open_labels) const;

  /// Variables whose state can change some event of this domain.
  std::vector<int> support() const;

  std::size_t node_count(Color color) const { return channel(color).node_gate.size(); }

 private:
  static constexpr int kNoGate = -1;
  /// Bond along AB: closed for every purpose.
  static constexpr int kWired = -2;

  struct Terminal {
    int node = -1;  // -1 for a direct edge
    int gate = kNoGate;
    BoundaryHits hits;
  };
  struct Channel {
    bool want_open = true;
    std::vector<int> node_gate;
    std::vector<std::array<int, 2>> links;
    std::vector<int> link_gate;
    std::vector<Terminal> terminals;
    std::vector<Terminal> directs;
  };

  const Channel& channel(Color c) const { return c == Color::Open ? open_ : closed_; }
  bool gate_passes(const Channel& ch, const Configuration& c, int gate) const;
  void build_site(Channel& ch, Relation rel);
  void build_bond_primal();
  void build_bond_dual();
  bool lies_on_ab(Site u, Site v) const;

  std::shared_ptr<const LatticeGraph> graph_;
  TriangleDomain domain_;
  TriangleGeometry geometry_;
  Channel open_, closed_;
  std::vector<Query> separating_, blocking_, two_arm_open_, two_arm_closed_;
};

bool crossing_event(const Configuration& c, const CrossingQuery& q);
bool separating_event(const Configuration& c, const TriangleDomain& d, int z);
bool two_arm_event(const Configuration& c, const TwoArmQuery& q);
/// Site mode only.
bool dual_blocking_event(const Configuration& c, const TriangleDomain& d, int z);

// ---------------------------------------------------------------------------
// Box crossings used by the critical-point oracle.

/// Left-right open crossing of the lattice box [0, w] x [0, h].  Site mode
/// uses the sites of the box; bond mode uses bonds with both ends in the box
/// except vertical bonds on the left and right sides.
class BoxCrossing {
 public:
  BoxCrossing(std::shared_ptr<const LatticeGraph> graph, int w, int h);

  /// Variables of the box, in id order.
  const std::vector<int>& variables() const { return vars_; }
  bool crosses(const Configuration& c) const;
  /// Smallest p at which threshold(field, p) crosses: the field value of
  /// the variable whose opening completes the crossing.
  double threshold(const UniformField& field) const;

 private:
  std::shared_ptr<const LatticeGraph> graph_;
  int w_, h_;
  std::vector<int> vars_;
  int nodes_ = 0;
  int left_ = 0, right_ = 0;
  // Bond mode: the two nodes a bond joins.  Site mode: the node itself and
  // the side node it touches (or itself).
  std::vector<std::array<int, 2>> ends_;
  // Site mode: neighbouring variable indices.
  std::vector<std::vector<int>> neighbours_;
};

}  // namespace perco
