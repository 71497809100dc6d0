#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "perco/arm_events.hpp"

#include <cmath>
#include <functional>
#include <set>

using namespace perco;

namespace {

std::shared_ptr<const LatticeGraph> box_graph(int R, Mode mode) {
  return std::make_shared<const LatticeGraph>(build_box_lattice(MeshSpec(R, mode), R, 0));
}

// Site-mode oracle on the square lattice: BFS clusters and augmenting-path
// max flow on an explicit split graph, written from the geometry alone.
struct SiteOracle {
  int r, R;
  bool half;

  bool in_annulus(int i, int j) const {
    if (std::abs(i) > R || std::abs(j) > R) return false;
    if (half && j < 0) return false;
    return !(std::abs(i) < r && std::abs(j) < r);
  }
  bool inner(int i, int j) const { return std::abs(i) <= r && std::abs(j) <= r; }
  bool outer(int i, int j) const { return std::abs(i) == R || std::abs(j) == R; }

  std::vector<std::array<int, 2>> cells(const Configuration& c, bool open) const {
    std::vector<std::array<int, 2>> out;
    for (int j = -R; j <= R; ++j)
      for (int i = -R; i <= R; ++i)
        if (in_annulus(i, j) && c.open(static_cast<std::size_t>(c.graph().vertex_id(i, j))) == open)
          out.push_back({i, j});
    return out;
  }
  static bool adjacent(std::array<int, 2> a, std::array<int, 2> b, bool open) {
    const int di = std::abs(a[0] - b[0]), dj = std::abs(a[1] - b[1]);
    return open ? di + dj == 1 : std::max(di, dj) == 1;
  }

  int clusters(const Configuration& c, bool open) const {
    const auto v = cells(c, open);
    std::vector<int> comp(v.size(), -1);
    int count = 0, next = 0;
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (comp[s] >= 0) continue;
      std::vector<std::size_t> stack{s};
      comp[s] = next;
      bool in = false, out = false;
      while (!stack.empty()) {
        const std::size_t x = stack.back();
        stack.pop_back();
        in = in || inner(v[x][0], v[x][1]);
        out = out || outer(v[x][0], v[x][1]);
        for (std::size_t y = 0; y < v.size(); ++y)
          if (comp[y] < 0 && adjacent(v[x], v[y], open)) {
            comp[y] = next;
            stack.push_back(y);
          }
      }
      ++next;
      if (in && out) ++count;
    }
    return count;
  }

  int flow(const Configuration& c, bool open) const {
    const auto v = cells(c, open);
    const int n = static_cast<int>(v.size());
    const int S = 2 * n, T = 2 * n + 1;
    std::vector<std::vector<int>> cap(static_cast<std::size_t>(2 * n + 2),
                                      std::vector<int>(static_cast<std::size_t>(2 * n + 2), 0));
    for (int x = 0; x < n; ++x) {
      cap[2 * x][2 * x + 1] = 1;
      if (inner(v[x][0], v[x][1])) cap[S][2 * x] = 1;
      if (outer(v[x][0], v[x][1])) cap[2 * x + 1][T] = 1;
      for (int y = 0; y < n; ++y)
        if (x != y && adjacent(v[x], v[y], open)) cap[2 * x + 1][2 * y] = 1;
    }
    int total = 0;
    for (;;) {
      std::vector<int> prev(static_cast<std::size_t>(2 * n + 2), -1);
      std::function<bool(int)> dfs = [&](int u) {
        if (u == T) return true;
        for (int w = 0; w < 2 * n + 2; ++w)
          if (cap[u][w] > 0 && prev[w] < 0 && w != S) {
            prev[w] = u;
            if (dfs(w)) return true;
          }
        return false;
      };
      if (!dfs(S)) break;
      for (int w = T; w != S; w = prev[w]) {
        --cap[prev[w]][w];
        ++cap[w][prev[w]];
      }
      ++total;
    }
    return total;
  }
};

void fill_row(Configuration& c, int j, int i_from, int i_to, bool open) {
  for (int i = std::min(i_from, i_to); i <= std::max(i_from, i_to); ++i)
    c.set(static_cast<std::size_t>(c.graph().vertex_id(i, j)), open);
}
void fill_column(Configuration& c, int i, int j_from, int j_to, bool open) {
  for (int j = std::min(j_from, j_to); j <= std::max(j_from, j_to); ++j)
    c.set(static_cast<std::size_t>(c.graph().vertex_id(i, j)), open);
}

}  // namespace

TEST_CASE("trivial configurations") {
  for (Mode mode : {Mode::Site, Mode::Bond}) {
    auto g = box_graph(8, mode);
    Configuration c(g);
    c.fill(true);
    for (ArmGeometry geo : {ArmGeometry::WholePlane, ArmGeometry::HalfPlane}) {
      CHECK(arm_event(c, {2, 8, 1, 0, geo}));
      CHECK_FALSE(arm_event(c, {2, 8, 1, 1, geo}));
      CHECK_FALSE(arm_event(c, {2, 8, 0, 1, geo}));
    }
    // a full open box carries many disjoint crossings
    CHECK(arm_event(c, {2, 8, 4, 0, ArmGeometry::WholePlane}));
    c.fill(false);
    CHECK(arm_event(c, {2, 8, 0, 1, ArmGeometry::WholePlane}));
    CHECK(arm_event(c, {2, 8, 0, 3, ArmGeometry::WholePlane}));
    CHECK_FALSE(arm_event(c, {2, 8, 1, 0, ArmGeometry::WholePlane}));
  }
}

TEST_CASE("arm request and window validation") {
  auto g = box_graph(8, Mode::Bond);
  Configuration c(g);
  CHECK_THROWS_AS(arm_event(c, {8, 8, 1, 0, ArmGeometry::WholePlane}), std::invalid_argument);
  CHECK_THROWS_AS(arm_event(c, {0, 8, 1, 0, ArmGeometry::WholePlane}), std::invalid_argument);
  CHECK_THROWS_AS(arm_event(c, {2, 8, 0, 0, ArmGeometry::WholePlane}), std::invalid_argument);
  CHECK_THROWS_AS(arm_event(c, {2, 9, 1, 0, ArmGeometry::WholePlane}), std::invalid_argument);
  CHECK_THROWS_AS(coarse_six_arm(c, 3, 8, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(coarse_six_arm(c, 2, 8, 1.5), std::invalid_argument);
  CHECK(parse_arm_geometry("half") == ArmGeometry::HalfPlane);
  CHECK_THROWS(parse_arm_geometry("quarter"));
}

TEST_CASE("cluster and flow counts match an independent oracle") {
  auto g = box_graph(4, Mode::Site);
  for (bool half : {false, true}) {
    const SiteOracle oracle{1, 4, half};
    const ArmDetector d(g, Box{-1, 1, -1, 1}, Box{-4, 4, -4, 4},
                        half ? ArmGeometry::HalfPlane : ArmGeometry::WholePlane);
    ArmWorkspace ws;
    for (std::uint64_t t = 0; t < 300; ++t) {
      const double p = 0.3 + 0.4 * static_cast<double>(t % 5) / 4.0;
      const Configuration c = sample(g, p, 515, t);
      for (bool open : {true, false}) {
        const int clusters = oracle.clusters(c, open);
        const int flow = oracle.flow(c, open);
        CHECK(d.crossing_clusters(c, open, ws) == clusters);
        CHECK(d.disjoint_crossings(c, open, 8, ws) == flow);
        CHECK(flow >= clusters);
      }
      // the counting rule
      const int oc = oracle.flow(c, true), cc = oracle.clusters(c, false);
      const int cf = oracle.flow(c, false);
      for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j) {
          if (i + j == 0) continue;
          bool expected;
          if (i == 0)
            expected = cf >= j;
          else if (j == 0)
            expected = oc >= i;
          else
            expected = oc >= i && cc >= j;
          CHECK(d.holds(c, i, j, ws) == expected);
        }
    }
  }
}

TEST_CASE("monotone in radii and in arm counts") {
  for (Mode mode : {Mode::Site, Mode::Bond}) {
    auto g = box_graph(16, mode);
    for (std::uint64_t t = 0; t < 200; ++t) {
      const Configuration c = sample(g, 0.5, 31, t);
      for (auto [i, j] : std::vector<std::array<int, 2>>{{1, 0}, {0, 2}, {1, 1}, {2, 1}, {3, 2}}) {
        for (ArmGeometry geo : {ArmGeometry::WholePlane, ArmGeometry::HalfPlane}) {
          const bool small_r = arm_event(c, {2, 16, i, j, geo});
          const bool big_r = arm_event(c, {4, 16, i, j, geo});
          const bool short_R = arm_event(c, {2, 8, i, j, geo});
          if (small_r) CHECK(big_r);
          if (small_r) CHECK(short_R);
          if (small_r && i > 1) CHECK(arm_event(c, {2, 16, i - 1, j, geo}));
          if (small_r && j > 1) CHECK(arm_event(c, {2, 16, i, j - 1, geo}));
          // distinct closed clusters of the half annulus may merge below j = 0
          if (geo == ArmGeometry::HalfPlane && small_r && j <= 1)
            CHECK(arm_event(c, {2, 16, i, j, ArmGeometry::WholePlane}) == true);
        }
      }
    }
  }
}

TEST_CASE("scan matches direct evaluation and is worker invariant") {
  const std::vector<ArmSpec> specs{
      {2, 16, 3, 2, ArmGeometry::WholePlane}, {4, 16, 3, 2, ArmGeometry::WholePlane},
      {8, 16, 3, 2, ArmGeometry::WholePlane}, {2, 16, 1, 1, ArmGeometry::HalfPlane},
      {4, 16, 1, 1, ArmGeometry::HalfPlane},  {4, 16, 1, 1, ArmGeometry::HalfPlane},
      {4, 8, 2, 1, ArmGeometry::HalfPlane}};
  const std::uint64_t n = 300;
  const auto rows = arm_scan(Mode::Bond, Variant::Square, specs, 0.5, n, 8, 1);
  const auto again = arm_scan(Mode::Bond, Variant::Square, specs, 0.5, n, 8, 3);
  auto g = box_graph(16, Mode::Bond);
  std::vector<std::uint64_t> direct(specs.size(), 0);
  for (std::uint64_t t = 0; t < n; ++t) {
    const Configuration c = sample(g, 0.5, 8, t);
    for (std::size_t k = 0; k < specs.size(); ++k)
      if (arm_event(c, specs[k])) ++direct[k];
  }
  for (std::size_t k = 0; k < specs.size(); ++k) {
    CHECK(rows[k].estimate.successes == direct[k]);
    CHECK(again[k].estimate.successes == direct[k]);
    CHECK(rows[k].spec == specs[k]);
  }
  CHECK(rows[4].estimate.successes == rows[5].estimate.successes);
}

TEST_CASE("one-arm probability decays with R") {
  std::vector<ArmSpec> specs;
  for (int R : {4, 8, 16}) specs.push_back({1, R, 1, 0, ArmGeometry::WholePlane});
  const auto rows = arm_scan(Mode::Bond, Variant::Square, specs, 0.5, 4000, 12, 0);
  CHECK(rows[0].estimate.p_hat > rows[1].estimate.p_hat);
  CHECK(rows[1].estimate.p_hat > rows[2].estimate.p_hat);
  const FitResult f = exponent_fit(fit_rows(rows, 1, 0, ArmGeometry::WholePlane));
  CHECK(f.slope > 0.0);
}

TEST_CASE("colour exchange under bond duality") {
  // Closed dual arms between the faces of the annulus (r, R) at p have the
  // law of open arms at 1 - p on the shifted lattice of face corners: the
  // hole becomes the box [-r-1, r]^2 and the outer box [-R, R-1]^2.
  auto g = box_graph(16, Mode::Bond);
  const ArmDetector faces(g, Box{-4, 4, -4, 4}, Box{-16, 16, -16, 16}, ArmGeometry::WholePlane);
  const ArmDetector corners(g, Box{-5, 4, -5, 4}, Box{-16, 15, -16, 15}, ArmGeometry::WholePlane);
  for (int k : {1, 2, 3}) {
    const std::uint64_t n = 6000;
    std::uint64_t a = 0, b = 0;
    ArmWorkspace ws;
    for (std::uint64_t t = 0; t < n; ++t) {
      if (faces.holds(sample(g, 0.45, 90 + k, t), 0, k, ws)) ++a;
      if (corners.holds(sample(g, 0.55, 190 + k, t), k, 0, ws)) ++b;
    }
    const Estimate x = make_estimate(a, n, 0, "dual");
    const Estimate y = make_estimate(b, n, 0, "primal");
    CHECK(std::abs(x.p_hat - y.p_hat) < 4 * std::hypot(x.sigma(), y.sigma()));
  }
}

TEST_CASE("coarse six-arm witness") {
  auto g = box_graph(8, Mode::Site);
  Configuration c(g);
  c.fill(false);
  // open rays from the square [0,4]^2 going up, right and left; the three
  // closed sectors between them are distinct closed clusters
  fill_column(c, 2, 4, 8, true);
  fill_row(c, 2, 4, 8, true);
  fill_row(c, 2, 0, -8, true);
  const CoarseArmDetector d(g, 4, 8, 0.5);
  CHECK(d.squares().size() == 4);
  CHECK(coarse_six_arm(c, 4, 8, 0.5));
  CHECK(coarse_arm_event(c, 4, 8, 0.5, 3, 2));
  // merging two closed sectors by cutting the left ray leaves five arms
  c.set(static_cast<std::size_t>(g->vertex_id(-5, 2)), false);
  CHECK_FALSE(coarse_six_arm(c, 4, 8, 0.5));
  CHECK(coarse_arm_event(c, 4, 8, 0.5, 2, 2));
  CHECK_FALSE(coarse_arm_event(c, 4, 8, 0.5, 3, 3));
  c.fill(true);
  CHECK_FALSE(coarse_six_arm(c, 4, 8, 0.5));
}

TEST_CASE("coarse filters agree with the full annulus") {
  auto g = box_graph(16, Mode::Bond);
  const CoarseArmDetector d(g, 2, 16, 0.5);
  for (std::uint64_t t = 0; t < 40; ++t) {
    const Configuration c = sample(g, 0.5, 44, t);
    for (auto [i, j] : std::vector<std::array<int, 2>>{{3, 2}, {1, 1}, {2, 1}}) {
      bool direct = false;
      for (const Box& sq : d.squares())
        if (ArmDetector(g, sq, Box{-16, 16, -16, 16}, ArmGeometry::WholePlane).holds(c, i, j)) {
          direct = true;
          break;
        }
      CHECK(d.holds(c, i, j) == direct);
    }
  }
}

TEST_CASE("six arms imply five arms from the same square") {
  const CoarseScanRow row = coarse_scan(Mode::Bond, Variant::Square, 2, 32, 0.5, 0.5, 150, 3, 0);
  CHECK(row.six.successes <= row.five.successes);
  CHECK(row.five.successes > 0);
  const CoarseScanRow again = coarse_scan(Mode::Bond, Variant::Square, 2, 32, 0.5, 0.5, 150, 3, 2);
  CHECK(again.six.successes == row.six.successes);
  CHECK(again.five.successes == row.five.successes);
}
