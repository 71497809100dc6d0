#include "perco/connectivity.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace perco {

std::string to_string(Color c) { return c == Color::Open ? "open" : "closed"; }

namespace {

void require_same_lattice(const LatticeGraph& a, const LatticeGraph& b) {
  if (!(a.mesh() == b.mesh()) || !(a.window() == b.window()))
    throw std::invalid_argument("configuration lives on a different lattice window");
}

void require_domain_fits(const LatticeGraph& g, const TriangleDomain& d) {
  const Window need = domain_window(d, g.mesh());
  const Window& w = g.window();
  if (need.i_min < w.i_min || need.i_max > w.i_max || need.j_min < w.j_min ||
      need.j_max > w.j_max)
    throw std::invalid_argument("domain does not fit inside the configuration window");
}

}  // namespace

TriangleEvents::TriangleEvents(std::shared_ptr<const LatticeGraph> graph,
                               const TriangleDomain& domain)
    : graph_(std::move(graph)), domain_(domain), geometry_(domain, graph_->mesh()) {
  require_domain_fits(*graph_, domain_);
  const MeshSpec& mesh = graph_->mesh();
  open_.want_open = true;
  closed_.want_open = false;
  if (mesh.mode() == Mode::Site) {
    build_site(open_, Relation::Bullet);
    build_site(closed_, closed_relation(mesh.variant()));
  } else {
    build_bond_primal();
    build_bond_dual();
  }

  const int steps = ab_steps();
  const ArcSpan bc = geometry_.arc(Arc::BC);
  const ArcSpan ca = geometry_.arc(Arc::CA);
  for (int z = 0; z <= steps; ++z) {
    separating_.push_back(
        compile(Color::Open, bc, geometry_.ab_span(Rational(0), Rational(z), true, true)));
    blocking_.push_back(
        compile(Color::Closed, ca, geometry_.ab_span(Rational(z), Rational(steps), false, true)));
    if (z == 0) {
      two_arm_open_.emplace_back();
      two_arm_closed_.emplace_back();
      continue;
    }
    const ArcSpan gap = geometry_.ab_span(Rational(z - 1), Rational(z), false, true);
    two_arm_open_.push_back(compile(Color::Open, bc, gap));
    two_arm_closed_.push_back(compile(Color::Closed, ca, gap));
  }
}

bool TriangleEvents::lies_on_ab(Site u, Site v) const {
  const auto h = geometry_.hits(u, v).side[0];
  return h && h->lo < h->hi;
}

void TriangleEvents::build_site(Channel& ch, Relation rel) {
  const LatticeGraph& g = *graph_;
  const auto& offsets = relation_offsets(rel, g.mesh().variant());

  const std::size_t nv = g.vertex_count();
  std::vector<int> node_of(nv, -1);
  std::vector<std::uint8_t> inside(nv, 0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (geometry_.interior(g.site(static_cast<int>(v)))) {
      inside[v] = 1;
      node_of[v] = static_cast<int>(ch.node_gate.size());
      ch.node_gate.push_back(static_cast<int>(v));
    }
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const Site s = g.site(static_cast<int>(v));
    for (const Site& o : offsets) {
      const auto u = g.find_vertex(s.i + o.i, s.j + o.j);
      if (!u) continue;
      const Site t = g.site(*u);
      if (inside[v] && inside[*u]) {
        if (node_of[*u] > node_of[v]) {
          ch.links.push_back({node_of[v], node_of[*u]});
          ch.link_gate.push_back(kNoGate);
        }
      } else if (inside[v]) {
        BoundaryHits h = geometry_.hits(s, t);
        if (h.any()) ch.terminals.push_back({node_of[v], kNoGate, h});
      } else if (!inside[*u] && static_cast<int>(v) < *u) {
        BoundaryHits h = geometry_.hits(s, t);
        if (h.any()) ch.directs.push_back({-1, kNoGate, h});
      }
    }
  }
}

void TriangleEvents::build_bond_primal() {
  const LatticeGraph& g = *graph_;
  Channel& ch = open_;
  const std::size_t nv = g.vertex_count();
  std::vector<int> node_of(nv, -1);
  for (std::size_t v = 0; v < nv; ++v) {
    if (geometry_.interior(g.site(static_cast<int>(v)))) {
      node_of[v] = static_cast<int>(ch.node_gate.size());
      ch.node_gate.push_back(kNoGate);
    }
  }
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto ends = g.edge_sites(static_cast<int>(e));
    const int a = node_of[static_cast<std::size_t>(g.vertex_id(ends[0].i, ends[0].j))];
    const int b = node_of[static_cast<std::size_t>(g.vertex_id(ends[1].i, ends[1].j))];
    const int gate = static_cast<int>(e);
    if (a >= 0 && b >= 0) {
      ch.links.push_back({a, b});
      ch.link_gate.push_back(gate);
      continue;
    }
    BoundaryHits h = geometry_.hits(ends[0], ends[1]);
    if (!h.any()) continue;
    if (a >= 0 || b >= 0) {
      ch.terminals.push_back({a >= 0 ? a : b, gate, h});
    } else if (!lies_on_ab(ends[0], ends[1])) {
      ch.directs.push_back({-1, gate, h});
    }
  }
}

void TriangleEvents::build_bond_dual() {
  const LatticeGraph& g = *graph_;
  Channel& ch = closed_;
  const std::size_t nf = g.face_count();
  std::vector<int> node_of(nf, -1);
  auto centre = [&](int f) -> std::array<std::int64_t, 2> {
    const Site s = g.face_corner(f);
    return {2 * std::int64_t{s.i} + 1, 2 * std::int64_t{s.j} + 1};
  };
  // Face centres can fall exactly on a slanted side.  Those on BC still
  // belong to the dual domain (BC is an arc of the primal crossing), those on
  // CA are part of the dual wall.
  const ArcSpan bc_arc = geometry_.arc(Arc::BC);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto c = centre(static_cast<int>(f));
    if (geometry_.interior2(c[0], c[1]) ||
        (geometry_.closed2(c[0], c[1]) && bc_arc.meets(geometry_.hits2(c, c)))) {
      node_of[f] = static_cast<int>(ch.node_gate.size());
      ch.node_gate.push_back(kNoGate);
    }
  }
  // A bond that cannot carry an open path from BC to AB is part of the wall
  // for the dual lattice: bonds along AB, and bonds leaving the interior (or
  // joining two boundary points) without reaching both BC and AB.
  const ArcSpan bc = geometry_.arc(Arc::BC);
  const ArcSpan ab = geometry_.ab_span(Rational(0), Rational(ab_steps()), true, true);
  auto inert = [&](Site u, Site v) {
    if (lies_on_ab(u, v)) return true;
    const bool iu = geometry_.interior(u), iv = geometry_.interior(v);
    if (iu && iv) return false;
    const BoundaryHits h = geometry_.hits(u, v);
    if (iu || iv) return !bc.meets(h) && !ab.meets(h);
    return !(bc.meets(h) && ab.meets(h));
  };
  for (std::size_t f = 0; f < nf; ++f) {
    const Site s = g.face_corner(static_cast<int>(f));
    // Right neighbour crosses the vertical edge at i+1; upper neighbour the
    // horizontal edge at j+1.
    const std::array<std::pair<Site, std::array<Site, 2>>, 2> steps = {{
        {{s.i + 1, s.j}, {Site{s.i + 1, s.j}, Site{s.i + 1, s.j + 1}}},
        {{s.i, s.j + 1}, {Site{s.i, s.j + 1}, Site{s.i + 1, s.j + 1}}},
    }};
    for (const auto& [nb, edge] : steps) {
      const auto g2 = g.find_face(nb.i, nb.j);
      if (!g2) continue;
      const auto e = g.edge_between(edge[0], edge[1]);
      if (!e) continue;
      const int a = node_of[f];
      const int b = node_of[static_cast<std::size_t>(*g2)];
      const int gate = inert(edge[0], edge[1]) ? kWired : *e;
      if (a >= 0 && b >= 0) {
        ch.links.push_back({a, b});
        ch.link_gate.push_back(gate);
        continue;
      }
      BoundaryHits h = geometry_.hits2(centre(static_cast<int>(f)), centre(*g2));
      if (!h.any()) continue;
      if (a >= 0 || b >= 0)
        ch.terminals.push_back({a >= 0 ? a : b, gate, h});
      else
        ch.directs.push_back({-1, gate, h});
    }
  }
}

bool TriangleEvents::gate_passes(const Channel& ch, const Configuration& c, int gate) const {
  if (gate == kNoGate) return true;
  if (gate == kWired) return !ch.want_open;
  return c.open(static_cast<std::size_t>(gate)) == ch.want_open;
}

TriangleEvents::Query TriangleEvents::compile(Color color, const ArcSpan& source,
                                              const ArcSpan& target) const {
  const Channel& ch = channel(color);
  Query q;
  q.color = color;
  for (std::size_t k = 0; k < ch.terminals.size(); ++k) {
    const auto& h = ch.terminals[k].hits;
    if (source.meets(h)) q.source.push_back(static_cast<int>(k));
    if (target.meets(h)) q.target.push_back(static_cast<int>(k));
  }
  for (std::size_t k = 0; k < ch.directs.size(); ++k) {
    const auto& h = ch.directs[k].hits;
    if (source.meets(h) && target.meets(h)) q.direct.push_back(static_cast<int>(k));
  }
  return q;
}

TriangleEvents::Query TriangleEvents::compile(Color color, Arc source, Arc target) const {
  if (source == target) throw std::invalid_argument("crossing needs two different arcs");
  return compile(color, geometry_.arc(source), geometry_.arc(target));
}

void TriangleEvents::label(const Configuration& c, Color color, Labels& out) const {
  require_same_lattice(c.graph(), *graph_);
  const Channel& ch = channel(color);
  const std::size_t n = ch.node_gate.size();
  out.color_ = color;
  out.config_ = &c;
  out.uf_.reset(n);
  out.root_.assign(n, -1);
  std::vector<int>& root = out.root_;
  for (std::size_t v = 0; v < n; ++v)
    if (gate_passes(ch, c, ch.node_gate[v])) root[v] = 0;
  for (std::size_t k = 0; k < ch.links.size(); ++k) {
    const auto [a, b] = ch.links[k];
    if (root[static_cast<std::size_t>(a)] < 0 || root[static_cast<std::size_t>(b)] < 0) continue;
    if (!gate_passes(ch, c, ch.link_gate[k])) continue;
    out.uf_.unite(a, b);
  }
  for (std::size_t v = 0; v < n; ++v)
    if (root[v] >= 0) root[v] = out.uf_.find(static_cast<int>(v));
  if (out.mark_.size() != n) {
    out.mark_.assign(n, 0);
    out.epoch_ = 0;
  }
}

bool TriangleEvents::holds(const Labels& labels, const Query& q) const {
  if (labels.config_ == nullptr || labels.color_ != q.color)
    throw std::invalid_argument("labels and query disagree on colour");
  const Channel& ch = channel(q.color);
  const Configuration& c = *labels.config_;
  for (int k : q.direct)
    if (gate_passes(ch, c, ch.directs[static_cast<std::size_t>(k)].gate)) return true;
  if (q.source.empty() || q.target.empty()) return false;
  if (++labels.epoch_ == 0) {
    std::fill(labels.mark_.begin(), labels.mark_.end(), 0);
    labels.epoch_ = 1;
  }
  const std::uint32_t epoch = labels.epoch_;
  bool any = false;
  for (int k : q.source) {
    const Terminal& t = ch.terminals[static_cast<std::size_t>(k)];
    const int r = labels.root_[static_cast<std::size_t>(t.node)];
    if (r < 0 || !gate_passes(ch, c, t.gate)) continue;
    labels.mark_[static_cast<std::size_t>(r)] = epoch;
    any = true;
  }
  if (!any) return false;
  for (int k : q.target) {
    const Terminal& t = ch.terminals[static_cast<std::size_t>(k)];
    const int r = labels.root_[static_cast<std::size_t>(t.node)];
    if (r < 0 || !gate_passes(ch, c, t.gate)) continue;
    if (labels.mark_[static_cast<std::size_t>(r)] == epoch) return true;
  }
  return false;
}

bool TriangleEvents::holds(const Configuration& c, const Query& q) const {
  Labels labels;
  label(c, q.color, labels);
  return holds(labels, q);
}

namespace {
void check_z(int z, int steps) {
  if (z < 0 || z > steps)
    throw std::out_of_range("point " + std::to_string(z) + " not on AB (0.." +
                            std::to_string(steps) + ")");
}
}  // namespace

bool TriangleEvents::separating(const Configuration& c, int z) const {
  check_z(z, ab_steps());
  return holds(c, separating_[static_cast<std::size_t>(z)]);
}

bool TriangleEvents::dual_blocking(const Configuration& c, int z) const {
  check_z(z, ab_steps());
  return holds(c, blocking_[static_cast<std::size_t>(z)]);
}

bool TriangleEvents::two_arm(const Configuration& c, int zbar, int z) const {
  check_z(zbar, ab_steps());
  check_z(z, ab_steps());
  if (z != zbar + 1) throw std::invalid_argument("two-arm points must be adjacent, zbar < z");
  const auto k = static_cast<std::size_t>(z);
  return holds(c, two_arm_open_[k]) && holds(c, two_arm_closed_[k]);
}

int TriangleEvents::first_separating(const Labels& open_labels) const {
  const int steps = ab_steps();
  for (int z = 0; z <= steps; ++z)
    if (holds(open_labels, separating_[static_cast<std::size_t>(z)])) return z;
  return steps + 1;
}

int TriangleEvents::first_separating(const Configuration& c) const {
  Labels labels;
  label(c, Color::Open, labels);
  return first_separating(labels);
}

std::vector<int> TriangleEvents::support() const {
  std::vector<int> out;
  for (const Channel* ch : {&open_, &closed_}) {
    for (int g : ch->node_gate) out.push_back(g);
    for (int g : ch->link_gate) out.push_back(g);
    for (const auto& t : ch->terminals) out.push_back(t.gate);
    for (const auto& t : ch->directs) out.push_back(t.gate);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(out.begin(), std::lower_bound(out.begin(), out.end(), 0));
  return out;
}

bool crossing_event(const Configuration& c, const CrossingQuery& q) {
  TriangleEvents ev(c.graph_ptr(), q.domain);
  return ev.holds(c, ev.compile(q.color, q.source, q.target));
}

bool separating_event(const Configuration& c, const TriangleDomain& d, int z) {
  return TriangleEvents(c.graph_ptr(), d).separating(c, z);
}

bool two_arm_event(const Configuration& c, const TwoArmQuery& q) {
  return TriangleEvents(c.graph_ptr(), q.domain).two_arm(c, q.zbar, q.z);
}

bool dual_blocking_event(const Configuration& c, const TriangleDomain& d, int z) {
  if (c.graph().mesh().mode() != Mode::Site)
    throw std::invalid_argument(
        "dual blocking is a site-mode event; in bond mode query the closed colour instead");
  return TriangleEvents(c.graph_ptr(), d).dual_blocking(c, z);
}

// ---------------------------------------------------------------------------

BoxCrossing::BoxCrossing(std::shared_ptr<const LatticeGraph> graph, int w, int h)
    : graph_(std::move(graph)), w_(w), h_(h) {
  const LatticeGraph& g = *graph_;
  if (w < 1 || h < 0) throw std::invalid_argument("box crossing needs w >= 1, h >= 0");
  if (!g.window().contains(0, 0) || !g.window().contains(w, h))
    throw std::invalid_argument("box does not fit inside the lattice window");
  auto local = [&](int i, int j) { return j * (w + 1) + i; };
  nodes_ = (w + 1) * (h + 1) + 2;
  left_ = nodes_ - 2;
  right_ = nodes_ - 1;

  if (g.mesh().mode() == Mode::Site) {
    const auto& offsets = relation_offsets(Relation::Bullet, g.mesh().variant());
    std::vector<int> index_of(g.vertex_count(), -1);
    for (int j = 0; j <= h; ++j)
      for (int i = 0; i <= w; ++i) {
        const int v = g.vertex_id(i, j);
        index_of[static_cast<std::size_t>(v)] = static_cast<int>(vars_.size());
        vars_.push_back(v);
        const int side = i == 0 ? left_ : (i == w ? right_ : local(i, j));
        ends_.push_back({local(i, j), side});
      }
    neighbours_.resize(vars_.size());
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      const Site s = g.site(vars_[k]);
      for (const Site& o : offsets) {
        const int i = s.i + o.i, j = s.j + o.j;
        if (i < 0 || i > w || j < 0 || j > h) continue;
        neighbours_[k].push_back(index_of[static_cast<std::size_t>(g.vertex_id(i, j))]);
      }
    }
  } else {
    for (int j = 0; j <= h; ++j)
      for (int i = 0; i <= w; ++i) {
        if (i < w) {
          vars_.push_back(*g.edge_between({i, j}, {i + 1, j}));
        }
        if (j < h && i > 0 && i < w) {
          vars_.push_back(*g.edge_between({i, j}, {i, j + 1}));
        }
      }
    std::sort(vars_.begin(), vars_.end());
    auto node = [&](Site s) {
      if (s.i == 0) return left_;
      if (s.i == w) return right_;
      return local(s.i, s.j);
    };
    for (int e : vars_) {
      const auto ends = g.edge_sites(e);
      ends_.push_back({node(ends[0]), node(ends[1])});
    }
  }
}

bool BoxCrossing::crosses(const Configuration& c) const {
  require_same_lattice(c.graph(), *graph_);
  UnionFind uf(static_cast<std::size_t>(nodes_));
  const bool site = graph_->mesh().mode() == Mode::Site;
  for (std::size_t k = 0; k < vars_.size(); ++k) {
    if (!c.open(static_cast<std::size_t>(vars_[k]))) continue;
    uf.unite(ends_[k][0], ends_[k][1]);
    if (site)
      for (int m : neighbours_[k])
        if (c.open(static_cast<std::size_t>(vars_[static_cast<std::size_t>(m)])))
          uf.unite(ends_[k][0], ends_[static_cast<std::size_t>(m)][0]);
  }
  return uf.same(left_, right_);
}

double BoxCrossing::threshold(const UniformField& field) const {
  std::vector<int> order(vars_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ua = field[static_cast<std::size_t>(vars_[static_cast<std::size_t>(a)])];
    const double ub = field[static_cast<std::size_t>(vars_[static_cast<std::size_t>(b)])];
    return ua < ub || (ua == ub && a < b);
  });
  UnionFind uf(static_cast<std::size_t>(nodes_));
  const bool site = graph_->mesh().mode() == Mode::Site;
  std::vector<std::uint8_t> opened(vars_.size(), 0);
  for (int k : order) {
    const auto ku = static_cast<std::size_t>(k);
    opened[ku] = 1;
    uf.unite(ends_[ku][0], ends_[ku][1]);
    if (site)
      for (int m : neighbours_[ku])
        if (opened[static_cast<std::size_t>(m)])
          uf.unite(ends_[ku][0], ends_[static_cast<std::size_t>(m)][0]);
    if (uf.same(left_, right_)) return field[static_cast<std::size_t>(vars_[ku])];
  }
  return 1.0;
}

}  // namespace perco
