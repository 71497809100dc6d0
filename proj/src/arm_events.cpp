#include "perco/arm_events.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace perco {

std::string to_string(ArmGeometry g) { return g == ArmGeometry::WholePlane ? "whole" : "half"; }

ArmGeometry parse_arm_geometry(const std::string& s) {
  if (s == "whole" || s == "whole-plane") return ArmGeometry::WholePlane;
  if (s == "half" || s == "half-plane") return ArmGeometry::HalfPlane;
  throw std::invalid_argument("unknown arm geometry '" + s + "' (expected whole or half)");
}

void validate(const ArmSpec& spec) {
  if (spec.r < 1 || spec.r >= spec.R)
    throw std::invalid_argument("arm radii need 1 <= r < R (got r=" + std::to_string(spec.r) +
                                ", R=" + std::to_string(spec.R) + ")");
  if (spec.open_arms < 0 || spec.closed_arms < 0 || spec.arms() < 1)
    throw std::invalid_argument("arm counts need i, j >= 0 and i + j >= 1");
}

std::string descriptor(const ArmSpec& spec) {
  return "arms:geometry=" + to_string(spec.geometry) + ",r=" + std::to_string(spec.r) +
         ",R=" + std::to_string(spec.R) + ",i=" + std::to_string(spec.open_arms) +
         ",j=" + std::to_string(spec.closed_arms);
}

// ---------------------------------------------------------------------------

ArmDetector::ArmDetector(std::shared_ptr<const LatticeGraph> graph, Box inner, Box outer,
                         ArmGeometry geometry)
    : graph_(std::move(graph)), inner_(inner), outer_(outer), geometry_(geometry) {
  if (!(outer.i0 <= inner.i0 && inner.i0 < inner.i1 && inner.i1 <= outer.i1 &&
        outer.j0 <= inner.j0 && inner.j0 < inner.j1 && inner.j1 <= outer.j1))
    throw std::invalid_argument("inner box must be a proper box inside the outer box");
  if (inner == outer) throw std::invalid_argument("annulus is empty");
  if (geometry == ArmGeometry::HalfPlane && outer.j1 <= 0)
    throw std::invalid_argument("half-plane annulus lies below j = 0");
  const Window& w = graph_->window();
  if (!w.contains(outer.i0, outer.j0) || !w.contains(outer.i1, outer.j1))
    throw std::invalid_argument("annulus does not fit inside the lattice window");
  open_.want_open = true;
  closed_.want_open = false;
  if (graph_->mesh().mode() == Mode::Site) {
    build_sites(open_, Relation::Bullet);
    build_sites(closed_, closed_relation(graph_->mesh().variant()));
  } else {
    build_bond_vertices();
    build_bond_faces();
  }
}

void ArmDetector::build_sites(Channel& ch, Relation rel) {
  const LatticeGraph& g = *graph_;
  const int width = outer_.i1 - outer_.i0 + 1;
  const int height = outer_.j1 - outer_.j0 + 1;
  std::vector<int> index(static_cast<std::size_t>(width * height), -1);
  auto slot = [&](int i, int j) -> int& {
    return index[static_cast<std::size_t>((j - outer_.j0) * width + (i - outer_.i0))];
  };
  const bool half = geometry_ == ArmGeometry::HalfPlane;
  for (int j = outer_.j0; j <= outer_.j1; ++j)
    for (int i = outer_.i0; i <= outer_.i1; ++i) {
      if (half && j < 0) continue;
      if (inner_.i0 < i && i < inner_.i1 && inner_.j0 < j && j < inner_.j1) continue;
      std::uint8_t t = 0;
      if (inner_.i0 <= i && i <= inner_.i1 && inner_.j0 <= j && j <= inner_.j1) t |= 1;
      if (i == outer_.i0 || i == outer_.i1 || j == outer_.j0 || j == outer_.j1) t |= 2;
      slot(i, j) = static_cast<int>(ch.node_gate.size());
      ch.node_gate.push_back(g.vertex_id(i, j));
      ch.touch.push_back(t);
    }
  for (int j = outer_.j0; j <= outer_.j1; ++j)
    for (int i = outer_.i0; i <= outer_.i1; ++i) {
      const int a = slot(i, j);
      if (a < 0) continue;
      for (const Site& o : relation_offsets(rel, g.mesh().variant())) {
        if (o.j < 0 || (o.j == 0 && o.i < 0)) continue;
        const int u = i + o.i, v = j + o.j;
        if (u < outer_.i0 || u > outer_.i1 || v > outer_.j1) continue;
        const int b = slot(u, v);
        if (b < 0) continue;
        ch.links.push_back({a, b});
        ch.link_gate.push_back(-1);
      }
    }
}

void ArmDetector::build_bond_vertices() {
  const LatticeGraph& g = *graph_;
  Channel& ch = open_;
  const int width = outer_.i1 - outer_.i0 + 1;
  const int height = outer_.j1 - outer_.j0 + 1;
  std::vector<int> index(static_cast<std::size_t>(width * height), -1);
  auto slot = [&](int i, int j) -> int& {
    return index[static_cast<std::size_t>((j - outer_.j0) * width + (i - outer_.i0))];
  };
  const bool half = geometry_ == ArmGeometry::HalfPlane;
  for (int j = outer_.j0; j <= outer_.j1; ++j)
    for (int i = outer_.i0; i <= outer_.i1; ++i) {
      if (half && j < 0) continue;
      if (inner_.i0 < i && i < inner_.i1 && inner_.j0 < j && j < inner_.j1) continue;
      std::uint8_t t = 0;
      if (inner_.i0 <= i && i <= inner_.i1 && inner_.j0 <= j && j <= inner_.j1) t |= 1;
      if (i == outer_.i0 || i == outer_.i1 || j == outer_.j0 || j == outer_.j1) t |= 2;
      slot(i, j) = static_cast<int>(ch.node_gate.size());
      ch.node_gate.push_back(-1);
      ch.touch.push_back(t);
    }
  for (int j = outer_.j0; j <= outer_.j1; ++j)
    for (int i = outer_.i0; i <= outer_.i1; ++i) {
      const int a = slot(i, j);
      if (a < 0) continue;
      if (i < outer_.i1 && slot(i + 1, j) >= 0) {
        ch.links.push_back({a, slot(i + 1, j)});
        ch.link_gate.push_back(*g.edge_between({i, j}, {i + 1, j}));
      }
      if (j < outer_.j1 && slot(i, j + 1) >= 0) {
        ch.links.push_back({a, slot(i, j + 1)});
        ch.link_gate.push_back(*g.edge_between({i, j}, {i, j + 1}));
      }
    }
}

void ArmDetector::build_bond_faces() {
  const LatticeGraph& g = *graph_;
  Channel& ch = closed_;
  // face (i, j) is the unit square with lower-left corner (i, j)
  const int width = outer_.i1 - outer_.i0;
  const int height = outer_.j1 - outer_.j0;
  std::vector<int> index(static_cast<std::size_t>(width * height), -1);
  auto slot = [&](int i, int j) -> int& {
    return index[static_cast<std::size_t>((j - outer_.j0) * width + (i - outer_.i0))];
  };
  auto hole = [&](int i, int j) {
    return inner_.i0 <= i && i + 1 <= inner_.i1 && inner_.j0 <= j && j + 1 <= inner_.j1;
  };
  const bool half = geometry_ == ArmGeometry::HalfPlane;
  for (int j = outer_.j0; j < outer_.j1; ++j)
    for (int i = outer_.i0; i < outer_.i1; ++i) {
      if (half && j < 0) continue;
      if (hole(i, j)) continue;
      std::uint8_t t = 0;
      if (hole(i - 1, j) || hole(i + 1, j) || hole(i, j - 1) || hole(i, j + 1)) t |= 1;
      if (i == outer_.i0 || i + 1 == outer_.i1 || j == outer_.j0 || j + 1 == outer_.j1) t |= 2;
      slot(i, j) = static_cast<int>(ch.node_gate.size());
      ch.node_gate.push_back(-1);
      ch.touch.push_back(t);
    }
  for (int j = outer_.j0; j < outer_.j1; ++j)
    for (int i = outer_.i0; i < outer_.i1; ++i) {
      const int a = slot(i, j);
      if (a < 0) continue;
      // the dual bond to the right crosses the vertical primal bond at i + 1
      if (i + 1 < outer_.i1 && slot(i + 1, j) >= 0) {
        ch.links.push_back({a, slot(i + 1, j)});
        ch.link_gate.push_back(*g.edge_between({i + 1, j}, {i + 1, j + 1}));
      }
      if (j + 1 < outer_.j1 && slot(i, j + 1) >= 0) {
        ch.links.push_back({a, slot(i, j + 1)});
        ch.link_gate.push_back(*g.edge_between({i, j + 1}, {i + 1, j + 1}));
      }
    }
}

int ArmDetector::label(const Channel& ch, const Configuration& c, ArmWorkspace& ws) const {
  const std::size_t n = ch.node_gate.size();
  ws.uf.reset(n);
  ws.alive.resize(n);
  for (std::size_t v = 0; v < n; ++v) ws.alive[v] = passes(ch, c, ch.node_gate[v]) ? 1 : 0;
  for (std::size_t k = 0; k < ch.links.size(); ++k) {
    const auto [a, b] = ch.links[k];
    if (ws.alive[static_cast<std::size_t>(a)] && ws.alive[static_cast<std::size_t>(b)] &&
        passes(ch, c, ch.link_gate[k]))
      ws.uf.unite(a, b);
  }
  ws.flags.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v)
    if (ws.alive[v])
      ws.flags[static_cast<std::size_t>(ws.uf.find(static_cast<int>(v)))] |= ch.touch[v];
  int count = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (ws.alive[v] && ws.flags[v] == 3 && ws.uf.find(static_cast<int>(v)) == static_cast<int>(v))
      ++count;
  return count;
}

int ArmDetector::flow(const Channel& ch, const Configuration& c, int cap,
                      ArmWorkspace& ws) const {
  // Uses the labels of the preceding label() call: only nodes of crossing
  // clusters can carry a crossing.
  const std::size_t n = ch.node_gate.size();
  ws.local.assign(n, -1);
  int k = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (ws.alive[v] && ws.flags[static_cast<std::size_t>(ws.uf.find(static_cast<int>(v)))] == 3)
      ws.local[v] = k++;
  if (k == 0) return 0;
  const int source = 2 * k, sink = 2 * k + 1;
  ws.head.assign(static_cast<std::size_t>(2 * k + 2), -1);
  ws.next.clear();
  ws.to.clear();
  ws.cap.clear();
  auto add = [&](int a, int b) {
    ws.to.push_back(b);
    ws.cap.push_back(1);
    ws.next.push_back(ws.head[static_cast<std::size_t>(a)]);
    ws.head[static_cast<std::size_t>(a)] = static_cast<int>(ws.to.size()) - 1;
    ws.to.push_back(a);
    ws.cap.push_back(0);
    ws.next.push_back(ws.head[static_cast<std::size_t>(b)]);
    ws.head[static_cast<std::size_t>(b)] = static_cast<int>(ws.to.size()) - 1;
  };
  for (std::size_t v = 0; v < n; ++v) {
    const int x = ws.local[v];
    if (x < 0) continue;
    add(2 * x, 2 * x + 1);
    if (ch.touch[v] & 1) add(source, 2 * x);
    if (ch.touch[v] & 2) add(2 * x + 1, sink);
  }
  for (std::size_t e = 0; e < ch.links.size(); ++e) {
    const int a = ws.local[static_cast<std::size_t>(ch.links[e][0])];
    const int b = ws.local[static_cast<std::size_t>(ch.links[e][1])];
    if (a < 0 || b < 0 || !passes(ch, c, ch.link_gate[e])) continue;
    add(2 * a + 1, 2 * b);
    add(2 * b + 1, 2 * a);
  }
  int total = 0;
  ws.parent_edge.resize(static_cast<std::size_t>(2 * k + 2));
  while (total < cap) {
    std::fill(ws.parent_edge.begin(), ws.parent_edge.end(), -1);
    ws.queue.clear();
    ws.queue.push_back(source);
    ws.parent_edge[static_cast<std::size_t>(source)] = -2;
    bool found = false;
    for (std::size_t q = 0; q < ws.queue.size() && !found; ++q) {
      const int u = ws.queue[q];
      for (int e = ws.head[static_cast<std::size_t>(u)]; e >= 0;
           e = ws.next[static_cast<std::size_t>(e)]) {
        const int v = ws.to[static_cast<std::size_t>(e)];
        if (ws.cap[static_cast<std::size_t>(e)] == 0 ||
            ws.parent_edge[static_cast<std::size_t>(v)] != -1)
          continue;
        ws.parent_edge[static_cast<std::size_t>(v)] = e;
        if (v == sink) {
          found = true;
          break;
        }
        ws.queue.push_back(v);
      }
    }
    if (!found) break;
    for (int v = sink; v != source;) {
      const int e = ws.parent_edge[static_cast<std::size_t>(v)];
      --ws.cap[static_cast<std::size_t>(e)];
      ++ws.cap[static_cast<std::size_t>(e ^ 1)];
      v = ws.to[static_cast<std::size_t>(e ^ 1)];
    }
    ++total;
  }
  return total;
}

int ArmDetector::crossing_clusters(const Configuration& c, bool open, ArmWorkspace& ws) const {
  return label(open ? open_ : closed_, c, ws);
}

int ArmDetector::disjoint_crossings(const Configuration& c, bool open, int cap,
                                    ArmWorkspace& ws) const {
  const Channel& ch = open ? open_ : closed_;
  const int clusters = label(ch, c, ws);
  if (clusters >= cap || clusters == 0) return std::min(clusters, cap);
  return flow(ch, c, cap, ws);
}

bool ArmDetector::holds(const Configuration& c, int open_arms, int closed_arms,
                        ArmWorkspace& ws) const {
  if (&c.graph() != graph_.get() && !(c.graph().window() == graph_->window() &&
                                      c.graph().mesh() == graph_->mesh()))
    throw std::invalid_argument("configuration belongs to a different lattice");
  if (open_arms < 0 || closed_arms < 0 || open_arms + closed_arms < 1)
    throw std::invalid_argument("arm counts need i, j >= 0 and i + j >= 1");
  if (open_arms == 0) return disjoint_crossings(c, false, closed_arms, ws) >= closed_arms;
  if (closed_arms == 0) return disjoint_crossings(c, true, open_arms, ws) >= open_arms;
  if (label(closed_, c, ws) < closed_arms) return false;
  return disjoint_crossings(c, true, open_arms, ws) >= open_arms;
}

bool ArmDetector::holds(const Configuration& c, int open_arms, int closed_arms) const {
  ArmWorkspace ws;
  return holds(c, open_arms, closed_arms, ws);
}

bool arm_event(const Configuration& c, const ArmSpec& spec) {
  validate(spec);
  const ArmDetector d(c.graph_ptr(), Box{-spec.r, spec.r, -spec.r, spec.r},
                      Box{-spec.R, spec.R, -spec.R, spec.R}, spec.geometry);
  return d.holds(c, spec.open_arms, spec.closed_arms);
}

// ---------------------------------------------------------------------------

CoarseArmDetector::CoarseArmDetector(std::shared_ptr<const LatticeGraph> graph, int r, int R,
                                     double c)
    : graph_(std::move(graph)), r_(r), R_(R) {
  if (r < 1 || r >= R) throw std::invalid_argument("coarse arms need 1 <= r < R");
  if (R % r != 0)
    throw std::invalid_argument("r=" + std::to_string(r) + " does not divide R=" +
                                std::to_string(R));
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("coarse fraction c must lie in (0, 1)");
  const Window& w = graph_->window();
  if (!w.contains(-R, -R) || !w.contains(R, R))
    throw std::invalid_argument("window does not contain [-R, R]^2");
  const double limit = c * R;
  const Box full{-R, R, -R, R};
  for (int b = -R; b + r <= R; b += r)
    for (int a = -R; a + r <= R; a += r) {
      if (a < -limit || a + r > limit || b < -limit || b + r > limit) continue;
      const Box sq{a, a + r, b, b + r};
      if (sq == full) continue;
      squares_.push_back(sq);
      std::vector<ArmDetector> chain;
      for (int m = r;; m = 2 * m + r) {
        const Box box{std::max(-R, a - m), std::min(R, a + r + m), std::max(-R, b - m),
                      std::min(R, b + r + m)};
        if (box == full) break;
        chain.emplace_back(graph_, sq, box, ArmGeometry::WholePlane);
      }
      filters_.push_back(std::move(chain));
    }
}

bool CoarseArmDetector::holds(const Configuration& config, int open_arms,
                              int closed_arms) const {
  ArmWorkspace ws;
  const Box full{-R_, R_, -R_, R_};
  for (std::size_t s = 0; s < squares_.size(); ++s) {
    bool alive = true;
    for (const ArmDetector& d : filters_[s])
      if (!d.holds(config, open_arms, closed_arms, ws)) {
        alive = false;
        break;
      }
    if (!alive) continue;
    const ArmDetector d(graph_, squares_[s], full, ArmGeometry::WholePlane);
    if (d.holds(config, open_arms, closed_arms, ws)) return true;
  }
  return false;
}

bool coarse_arm_event(const Configuration& config, int r, int R, double c, int open_arms,
                      int closed_arms) {
  return CoarseArmDetector(config.graph_ptr(), r, R, c).holds(config, open_arms, closed_arms);
}

bool coarse_six_arm(const Configuration& config, int r, int R, double c) {
  return coarse_arm_event(config, r, R, c, 3, 3);
}

// ---------------------------------------------------------------------------

std::vector<ArmScanRow> arm_scan(Mode mode, Variant variant, const std::vector<ArmSpec>& specs,
                                 double p, std::uint64_t n, std::uint64_t seed,
                                 unsigned workers) {
  if (specs.empty()) throw std::invalid_argument("arm scan needs at least one spec");
  if (n < 1) throw std::invalid_argument("arm scan needs n >= 1");
  check_probability(p);
  int R_max = 0;
  for (const ArmSpec& s : specs) {
    validate(s);
    R_max = std::max(R_max, s.R);
  }
  auto graph = std::make_shared<const LatticeGraph>(
      build_box_lattice(MeshSpec(std::max(2, R_max), mode, variant), R_max, 0));
  std::vector<ArmDetector> detectors;
  for (const ArmSpec& s : specs)
    detectors.emplace_back(graph, Box{-s.r, s.r, -s.r, s.r}, Box{-s.R, s.R, -s.R, s.R},
                           s.geometry);
  // Specs sharing (geometry, R, i, j) are evaluated from the largest r down:
  // an event at r implies the event at every larger inner radius.
  std::map<std::tuple<int, int, int, int>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const ArmSpec& s = specs[k];
    groups[{static_cast<int>(s.geometry), s.R, s.open_arms, s.closed_arms}].push_back(k);
  }
  std::vector<std::vector<std::size_t>> order;
  for (auto& [key, idx] : groups) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return specs[a].r > specs[b].r; });
    order.push_back(idx);
  }
  std::vector<std::vector<std::uint64_t>> partial(chunk_count(n));
  for_each_chunk(n, workers, [&](std::uint64_t begin, std::uint64_t end, std::size_t chunk) {
    std::vector<std::uint64_t> hits(specs.size(), 0);
    Configuration c(graph);
    ArmWorkspace ws;
    for (std::uint64_t t = begin; t < end; ++t) {
      sample_into(c, p, seed, t);
      for (const auto& idx : order) {
        for (std::size_t k : idx) {
          if (!detectors[k].holds(c, specs[k].open_arms, specs[k].closed_arms, ws)) break;
          ++hits[k];
        }
      }
    }
    partial[chunk] = std::move(hits);
  });
  std::vector<ArmScanRow> rows;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    std::uint64_t s = 0;
    for (const auto& part : partial) s += part[k];
    rows.push_back({specs[k], make_estimate(s, n, seed, descriptor(specs[k]))});
  }
  return rows;
}

std::vector<ArmScanRow> five_arm_probability_scan(Mode mode, Variant variant, double p,
                                                  const std::vector<std::array<int, 2>>& radii,
                                                  std::uint64_t n, std::uint64_t seed,
                                                  unsigned workers, bool four_one) {
  std::vector<ArmSpec> specs;
  for (const auto& rr : radii) {
    specs.push_back({rr[0], rr[1], 3, 2, ArmGeometry::WholePlane});
    if (four_one) specs.push_back({rr[0], rr[1], 4, 1, ArmGeometry::WholePlane});
  }
  return arm_scan(mode, variant, specs, p, n, seed, workers);
}

std::vector<FitRow> fit_rows(const std::vector<ArmScanRow>& rows, int open_arms, int closed_arms,
                             ArmGeometry geometry) {
  std::vector<FitRow> out;
  for (const ArmScanRow& row : rows) {
    if (row.spec.open_arms != open_arms || row.spec.closed_arms != closed_arms ||
        row.spec.geometry != geometry)
      continue;
    out.push_back({static_cast<double>(row.spec.r) / row.spec.R, row.estimate.successes,
                   row.estimate.n});
  }
  return out;
}

CoarseScanRow coarse_scan(Mode mode, Variant variant, int r, int R, double c, double p,
                          std::uint64_t n, std::uint64_t seed, unsigned workers) {
  if (n < 1) throw std::invalid_argument("coarse scan needs n >= 1");
  check_probability(p);
  auto graph = std::make_shared<const LatticeGraph>(
      build_box_lattice(MeshSpec(std::max(2, R), mode, variant), R, 0));
  const CoarseArmDetector detector(graph, r, R, c);
  std::vector<std::array<std::uint64_t, 2>> partial(chunk_count(n), {0, 0});
  for_each_chunk(n, workers, [&](std::uint64_t begin, std::uint64_t end, std::size_t chunk) {
    Configuration config(graph);
    std::array<std::uint64_t, 2> hits{0, 0};
    for (std::uint64_t t = begin; t < end; ++t) {
      sample_into(config, p, seed, t);
      if (!detector.holds(config, 3, 2)) continue;
      ++hits[1];
      if (detector.holds(config, 3, 3)) ++hits[0];
    }
    partial[chunk] = hits;
  });
  std::array<std::uint64_t, 2> total{0, 0};
  for (const auto& h : partial) {
    total[0] += h[0];
    total[1] += h[1];
  }
  const std::string tag = "coarse:r=" + std::to_string(r) + ",R=" + std::to_string(R) +
                          ",c=" + std::to_string(c);
  CoarseScanRow row;
  row.r = r;
  row.R = R;
  row.c = c;
  row.six = make_estimate(total[0], n, seed, tag + ",i=3,j=3");
  row.five = make_estimate(total[1], n, seed, tag + ",i=3,j=2");
  return row;
}

}  // namespace perco
