#pragma once

#include "perco/configuration.hpp"
#include "perco/estimators.hpp"
#include "perco/lattice.hpp"
#include "perco/union_find.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace perco {

enum class ArmGeometry { WholePlane, HalfPlane };

std::string to_string(ArmGeometry g);
ArmGeometry parse_arm_geometry(const std::string& s);

struct ArmSpec {
  int r = 1;
  int R = 2;
  int open_arms = 0;
  int closed_arms = 0;
  ArmGeometry geometry = ArmGeometry::WholePlane;

  int arms() const { return open_arms + closed_arms; }
  bool operator==(const ArmSpec&) const = default;
};

void validate(const ArmSpec& spec);
std::string descriptor(const ArmSpec& spec);

/// Closed box [i0, i1] x [j0, j1] in lattice units.
struct Box {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
  bool operator==(const Box&) const = default;
};

struct ArmWorkspace {
  UnionFind uf;
  std::vector<std::uint8_t> alive, flags;
  std::vector<int> local;
  // residual network
  std::vector<int> head, next, to, parent_edge, queue;
  std::vector<std::int8_t> cap;
};

/// Arm events across the annulus between an inner box and an outer box.
///
/// Open arms use the bullet relation (open bonds in bond mode); closed arms
/// use the matching relation on closed sites, or closed dual bonds between
/// faces in bond mode.  The annulus keeps the vertices (faces) of the outer
/// box that are not strictly inside the inner box; half-plane geometry also
/// drops everything below j = 0.
///
/// Counting rule for (i open, j closed):
///   i, j >= 1: i vertex-disjoint open crossings and j distinct closed
///              crossing clusters,
///   j = 0:     i vertex-disjoint open crossings,
///   i = 0:     j vertex-disjoint closed crossings.
/// Distinct closed clusters must be separated by open crossings, so the
/// arms alternate; disjoint open crossings may share a cluster.
class ArmDetector {
 public:
  ArmDetector(std::shared_ptr<const LatticeGraph> graph, Box inner, Box outer,
              ArmGeometry geometry);

  bool holds(const Configuration& c, int open_arms, int closed_arms, ArmWorkspace& ws) const;
  bool holds(const Configuration& c, int open_arms, int closed_arms) const;

  /// Distinct clusters of one colour touching both boundaries.
  int crossing_clusters(const Configuration& c, bool open, ArmWorkspace& ws) const;
  /// Vertex-disjoint crossings of one colour, counted up to `cap`.
  int disjoint_crossings(const Configuration& c, bool open, int cap, ArmWorkspace& ws) const;

  std::size_t node_count(bool open) const { return (open ? open_ : closed_).node_gate.size(); }

 private:
  struct Channel {
    bool want_open = true;
    std::vector<int> node_gate;  // variable id, or -1 when always passable
    std::vector<std::uint8_t> touch;  // bit 0 inner, bit 1 outer
    std::vector<std::array<int, 2>> links;
    std::vector<int> link_gate;
  };

  bool passes(const Channel& ch, const Configuration& c, int gate) const {
    return gate < 0 || c.open(static_cast<std::size_t>(gate)) == ch.want_open;
  }
  int label(const Channel& ch, const Configuration& c, ArmWorkspace& ws) const;
  int flow(const Channel& ch, const Configuration& c, int cap, ArmWorkspace& ws) const;
  void build_sites(Channel& ch, Relation rel);
  void build_bond_vertices();
  void build_bond_faces();

  std::shared_ptr<const LatticeGraph> graph_;
  Box inner_, outer_;
  ArmGeometry geometry_;
  Channel open_, closed_;
};

/// Window must contain [-R, R]^2.
bool arm_event(const Configuration& c, const ArmSpec& spec);

/// Arm events from the squares of the r-grid of [-R, R]^2 that lie inside
/// [-cR, cR]^2 out to the boundary of [-R, R]^2.  Every square is first
/// tested against a chain of smaller outer boxes: arms reaching the far
/// boundary also cross every intermediate box, so a failure there is final.
class CoarseArmDetector {
 public:
  CoarseArmDetector(std::shared_ptr<const LatticeGraph> graph, int r, int R, double c);

  bool holds(const Configuration& config, int open_arms, int closed_arms) const;
  const std::vector<Box>& squares() const { return squares_; }

 private:
  std::shared_ptr<const LatticeGraph> graph_;
  int r_, R_;
  std::vector<Box> squares_;
  // per square: detectors on growing outer boxes, excluding the full box
  std::vector<std::vector<ArmDetector>> filters_;
};

bool coarse_arm_event(const Configuration& config, int r, int R, double c, int open_arms,
                      int closed_arms);
/// Six alternating arms (3 open, 3 closed) from some grid square.
bool coarse_six_arm(const Configuration& config, int r, int R, double c);

// ---------------------------------------------------------------------------

struct ArmScanRow {
  ArmSpec spec;
  Estimate estimate;
};

/// Estimates every requested event from one shared configuration per replicate on the
/// box lattice [-R_max, R_max]^2.
std::vector<ArmScanRow> arm_scan(Mode mode, Variant variant, const std::vector<ArmSpec>& specs,
                                 double p, std::uint64_t n, std::uint64_t seed,
                                 unsigned workers);

/// Five-arm rows (3 open, 2 closed), and (4, 1) rows when requested.
std::vector<ArmScanRow> five_arm_probability_scan(Mode mode, Variant variant, double p,
                                                  const std::vector<std::array<int, 2>>& radii,
                                                  std::uint64_t n, std::uint64_t seed,
                                                  unsigned workers, bool four_one = false);

/// Rows grouped by (i, j, geometry) turned into exponent-fit tables.
std::vector<FitRow> fit_rows(const std::vector<ArmScanRow>& rows, int open_arms, int closed_arms,
                             ArmGeometry geometry);

struct CoarseScanRow {
  int r = 0, R = 0;
  double c = 0.0;
  Estimate six, five;
};

/// Six-arm and five-arm coarse events from the same configurations.
CoarseScanRow coarse_scan(Mode mode, Variant variant, int r, int R, double c, double p,
                          std::uint64_t n, std::uint64_t seed, unsigned workers);

}  // namespace perco
