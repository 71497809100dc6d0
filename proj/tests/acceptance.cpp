// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance --cli path/to/perco [criterion ...]

#include "perco/arm_events.hpp"
#include "perco/conformal.hpp"
#include "perco/connectivity.hpp"
#include "perco/estimators.hpp"
#include "perco/runner.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace perco;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::shared_ptr<const LatticeGraph> lattice_for(const MeshSpec& m,
                                                const std::vector<TriangleDomain>& ds) {
  return std::make_shared<const LatticeGraph>(build_lattice(m, ds));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string cli_path;
fs::path scratch;

// Runs the CLI; returns the output file contents.
std::string run_cli(const std::string& command, const std::string& config, unsigned workers,
                    const std::string& name) {
  const fs::path cfg = scratch / (name + ".cfg");
  const fs::path out = scratch / fmt::format("{}.w{}.out", name, workers);
  std::ofstream(cfg) << config;
  const std::string line = fmt::format("\"{}\" {} --config \"{}\" --workers {} --out \"{}\"",
                                       cli_path, command, cfg.string(), workers, out.string());
  if (std::system(line.c_str()) != 0) throw std::runtime_error("command failed: " + line);
  return read_file(out);
}

// ---------------------------------------------------------------------------

// f_l(Z) - f_l(Z̄) against P(H(D, Z̄, Z)) as exact rationals, site mode.
Outcome criterion1() {
  const auto t0 = Clock::now();
  int pairs = 0, bad = 0;
  const ExactRational half(1, 2);
  for (int l = 2; l <= 4; ++l) {
    const MeshSpec m(l, Mode::Site);
    const TriangleDomain d = TriangleDomain::isosceles();
    const Profile prof = separating_profile_exact(m, d, half);
    auto g = lattice_for(m, {d});
    const TriangleEvents ev(g, d);
    for (int z = 1; z <= prof.steps; ++z) {
      const ExactRational h = exact_probability(
          g, ev.support(), [&](const Configuration& c) { return ev.two_arm(c, z - 1, z); }, half);
      ++pairs;
      if (*prof.points[z].exact - *prof.points[z - 1].exact != h) ++bad;
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 60.0,
          fmt::format("{} adjacent pairs over l = 2..4, {} mismatches, {:.1f} s", pairs, bad, secs)};
}

// l^2 second difference against l^2 [P(H(D, Z̄, Z)) - P(H(tau+ D, Z̄, Z))].
Outcome criterion2() {
  int triples = 0, bad = 0;
  const ExactRational half(1, 2);
  for (int l = 2; l <= 4; ++l) {
    const MeshSpec m(l, Mode::Site);
    const TriangleDomain d = TriangleDomain::isosceles();
    const TriangleDomain dr = shift_domain(d, TriangleShift::RightTau, m);
    const Profile prof = separating_profile_exact(m, d, half);
    auto g = lattice_for(m, {d, dr});
    const TriangleEvents ev(g, d), evr(g, dr);
    std::vector<int> vars = ev.support();
    for (int v : evr.support()) vars.push_back(v);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    const ExactRational l2(l * l);
    for (int z = 2; z <= prof.steps; ++z) {
      // tau+ D starts one step right, so absolute points z-1, z are its
      // offsets z-2, z-1.
      const auto probs = exact_probabilities(
          g, vars,
          {[&](const Configuration& c) { return ev.two_arm(c, z - 1, z); },
           [&](const Configuration& c) { return evr.two_arm(c, z - 2, z - 1); }},
          half);
      const Difference g2 = second_difference(prof, z - 2, z - 1, z);
      ++triples;
      if (!g2.exact || *g2.exact != l2 * (probs[0] - probs[1])) ++bad;
    }
  }
  return {bad == 0, fmt::format("{} adjacent triples over l = 2..4, {} mismatches", triples, bad)};
}

// separating XOR dual blocking at every Z, site mode l = 8, p = 1/2.
Outcome criterion3() {
  const MeshSpec m(8, Mode::Site);
  const TriangleDomain d = TriangleDomain::isosceles();
  auto g = lattice_for(m, {d});
  const TriangleEvents ev(g, d);
  Configuration c(g);
  std::uint64_t bad = 0;
  const std::uint64_t samples = 10000;
  for (std::uint64_t r = 0; r < samples; ++r) {
    sample_into(c, 0.5, 3003, r);
    bool ok = true;
    for (int z = 0; z <= ev.ab_steps(); ++z)
      if (ev.separating(c, z) == ev.dual_blocking(c, z)) ok = false;
    if (!ok) ++bad;
  }
  return {bad == 0, fmt::format("{} of {} samples violate the exclusive or", bad, samples)};
}

// E(Z̄) implies E(Z) for Z̄ < Z under common random numbers, and thresholded
// fields nest in p.
Outcome criterion4() {
  std::uint64_t samples = 0, bad_z = 0, bad_p = 0;
  for (Mode mode : {Mode::Site, Mode::Bond}) {
    const MeshSpec m(16, mode);
    const TriangleDomain d = TriangleDomain::isosceles();
    auto g = lattice_for(m, {d});
    const TriangleEvents ev(g, d);
    const int steps = ev.ab_steps();
    for (std::uint64_t r = 0; r < 10000; ++r) {
      ++samples;
      const UniformField field(g, 4004, r);
      bool z_ok = true, p_ok = true;
      std::vector<std::uint8_t> prev_states;
      std::vector<bool> prev_sep;
      for (double p : {0.3, 0.5, 0.7}) {
        const Configuration c = threshold(field, p);
        std::vector<bool> sep(steps + 1);
        for (int z = 0; z <= steps; ++z) sep[z] = ev.separating(c, z);
        for (int z = 1; z <= steps; ++z)
          if (sep[z - 1] && !sep[z]) z_ok = false;
        if (!prev_states.empty()) {
          for (std::size_t k = 0; k < c.size(); ++k)
            if (prev_states[k] && !c.open(k)) p_ok = false;
          for (int z = 0; z <= steps; ++z)
            if (prev_sep[z] && !sep[z]) p_ok = false;
        }
        prev_states = c.states();
        prev_sep = sep;
      }
      if (!z_ok) ++bad_z;
      if (!p_ok) ++bad_p;
    }
  }
  return {bad_z == 0 && bad_p == 0,
          fmt::format("{} samples (site and bond, l = 16, p = 0.3/0.5/0.7): {} break monotonicity "
                      "in Z, {} break nesting in p",
                      samples, bad_z, bad_p)};
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  const MeshSpec m(64, Mode::Bond);
  const TriangleDomain d = TriangleDomain::isosceles();
  auto g = lattice_for(m, {d});
  auto ev = std::make_shared<const TriangleEvents>(g, d);
  const auto q = ev->compile(Color::Open, Arc::AX, Arc::BC);
  const Detector det = [ev, q](const Configuration& c) { return ev->holds(c, q); };
  const Estimate lo = estimate(g, det, 0.35, 10000, 5005, 0, "crossing l=64 p=0.35");
  const Estimate hi = estimate(g, det, 0.65, 10000, 5005, 0, "crossing l=64 p=0.65");
  const double secs = seconds_since(t0);
  return {lo.p_hat < 0.05 && hi.p_hat > 0.95 && secs < 300.0,
          fmt::format("p_hat(0.35) = {:.4f}, p_hat(0.65) = {:.4f}, {:.1f} s", lo.p_hat, hi.p_hat,
                      secs)};
}

Outcome criterion6() {
  const MeshSpec m(3, Mode::Bond);
  const TriangleDomain d = TriangleDomain::isosceles();
  auto g = lattice_for(m, {d});
  auto ev = std::make_shared<const TriangleEvents>(g, d);
  const auto q = ev->compile(Color::Open, Arc::AX, Arc::BC);
  const Detector det = [ev, q](const Configuration& c) { return ev->holds(c, q); };
  const double exact = to_double(exact_probability(g, ev->support(), det, ExactRational(1, 2)));
  int passes = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Estimate e = estimate(g, det, 0.5, 100000, 6000 + seed, 0, "oracle check");
    const double z = std::abs(e.p_hat - exact) / e.sigma();
    worst = std::max(worst, z);
    if (z < 4.0) ++passes;
  }
  return {passes >= 9, fmt::format("exact {:.6f}; {} of 10 seeds within 4 sigma (largest {:.2f})",
                                   exact, passes, worst)};
}

struct ArmFits {
  FitResult five, two, three;
  std::vector<ArmScanRow> rows;
  double seconds = 0.0;
};

const ArmFits& arm_fits() {
  static const ArmFits fits = [] {
    ArmFits f;
    const auto t0 = Clock::now();
    std::vector<ArmSpec> specs;
    for (int r : {4, 8, 16}) {
      specs.push_back({r, 64, 3, 2, ArmGeometry::WholePlane});
      specs.push_back({r, 64, 1, 1, ArmGeometry::HalfPlane});
      specs.push_back({r, 64, 2, 1, ArmGeometry::HalfPlane});
    }
    f.rows = arm_scan(Mode::Bond, Variant::Square, specs, 0.5, 100000, 7007, 0);
    f.five = exponent_fit(fit_rows(f.rows, 3, 2, ArmGeometry::WholePlane));
    f.two = exponent_fit(fit_rows(f.rows, 1, 1, ArmGeometry::HalfPlane));
    f.three = exponent_fit(fit_rows(f.rows, 2, 1, ArmGeometry::HalfPlane));
    f.seconds = seconds_since(t0);
    return f;
  }();
  return fits;
}

std::string arm_table(const ArmFits& f, int i, int j, ArmGeometry g) {
  std::string s;
  for (const ArmScanRow& row : f.rows)
    if (row.spec.open_arms == i && row.spec.closed_arms == j && row.spec.geometry == g)
      s += fmt::format(" P(r={})={:.4f}", row.spec.r, row.estimate.p_hat);
  return s;
}

Outcome criterion7() {
  const ArmFits& f = arm_fits();
  return {f.five.slope >= 1.5 && f.five.slope <= 2.5 && f.seconds < 1800.0,
          fmt::format("whole-plane (3 open, 2 closed) slope {:.3f} +- {:.3f};{}; scan {:.0f} s",
                      f.five.slope, f.five.stderr_slope,
                      arm_table(f, 3, 2, ArmGeometry::WholePlane), f.seconds)};
}

Outcome criterion8() {
  const ArmFits& f = arm_fits();
  const bool two = f.two.slope >= 0.7 && f.two.slope <= 1.3;
  const bool three = f.three.slope >= 1.5 && f.three.slope <= 2.5;
  return {two && three && f.seconds < 1800.0,
          fmt::format("half-plane 2-arm slope {:.3f} +- {:.3f};{}; 3-arm slope {:.3f} +- {:.3f};{}",
                      f.two.slope, f.two.stderr_slope, arm_table(f, 1, 1, ArmGeometry::HalfPlane),
                      f.three.slope, f.three.stderr_slope,
                      arm_table(f, 2, 1, ArmGeometry::HalfPlane))};
}

Outcome criterion9() {
  const SCMap p1 = phi1_printed(), p1a = phi1_angle(), p2 = phi2();
  double ends = 0.0;
  for (const SCMap* m : {&p1, &p1a}) {
    ends = std::max(ends, std::abs(sc_value(*m, 0.0)));
    ends = std::max(ends, std::abs(sc_value(*m, 1.0) - 1.0));
  }
  const double mid = std::abs(sc_value(p2, 0.5) - 0.5);
  double round_trip = 0.0;
  for (const SCMap* m : {&p1, &p1a, &p2})
    for (int k = 1; k <= 99; ++k) {
      const double x = k / 100.0;
      round_trip = std::max(round_trip, std::abs(sc_value(*m, sc_inverse(*m, x)) - x));
    }
  const SCMap c1 = phi1_printed(1e-8), c1a = phi1_angle(1e-8), c2 = phi2(1e-8);
  double refine = 0.0;
  for (int k = 1; k <= 99; ++k) {
    const double X = k / 100.0;
    refine = std::max(refine, std::abs(psi(p1, p2, X) - psi(c1, c2, X)));
    refine = std::max(refine, std::abs(psi(p1a, p2, X) - psi(c1a, c2, X)));
  }
  return {ends <= 1e-10 && mid <= 1e-10 && round_trip <= 1e-10 && refine <= 1e-8,
          fmt::format("endpoint error {:.1e}, phi2(1/2) error {:.1e}, round trip {:.1e}, "
                      "tolerance refinement {:.1e}",
                      ends, mid, round_trip, refine)};
}

const char* kTableConfig =
    "experiment = crossing\n"
    "mode = bond\n"
    "variant = square\n"
    "l = 16, 32, 64, 128\n"
    "X = 1/4, 1/2, 3/4\n"
    "p = 0.5\n"
    "n = 20000\n"
    "seed = 20240610\n";

Outcome criterion10() {
  const auto t0 = Clock::now();
  const std::string a = run_cli("crossing", kTableConfig, 1, "table");
  const std::string b = run_cli("crossing", kTableConfig, 3, "table");
  const double secs = seconds_since(t0);
  const ResultRecord rec = parse_record(a);
  auto col = [&](const std::string& name) {
    return std::find(rec.columns.begin(), rec.columns.end(), name) - rec.columns.begin();
  };
  const auto lo = col("ci_low"), hi = col("ci_high");
  const bool has_cols = static_cast<std::size_t>(col("pi_minus_X")) < rec.columns.size() &&
                        static_cast<std::size_t>(col("pi_minus_X89")) < rec.columns.size();
  double widest = 0.0;
  for (const ResultRow& row : rec.rows)
    widest = std::max(widest, (std::stod(row.cells[hi]) - std::stod(row.cells[lo])) / 2.0);
  const bool same = a == b;
  std::string table;
  for (const ResultRow& row : rec.rows)
    table += fmt::format("\n    l={:>3} X={}/{} p_hat={} pi-X={} pi-X^(8/9)={}", row.cells[col("l")],
                         row.cells[col("X_num")], row.cells[col("X_den")], row.cells[col("p_hat")],
                         row.cells[col("pi_minus_X")], row.cells[col("pi_minus_X89")]);
  return {rec.rows.size() == 12 && has_cols && widest < 0.01 && same && secs < 7200.0,
          fmt::format("{} cells, widest half-width {:.4f}, workers 1 vs 3 byte-identical: {}, "
                      "{:.0f} s{}",
                      rec.rows.size(), widest, same ? "yes" : "no", secs, table)};
}

Outcome criterion11() {
  const std::map<std::string, std::string> configs = {
      {"crossing", "l = 8, 16\nX = 1/4, 1/2\np = 0.4, 0.5\nn = 4000\nseed = 11\n"},
      {"profile", "mode = site\nl = 6\np = 0.5\nn = 4000\nseed = 12\n"},
      {"arms", "r = 2, 4\nR = 16\narms = whole:3:2, half:1:1, whole:1:0\nn = 1500\nseed = 13\n"},
      {"sixarm", "mode = site\nr = 4\nR = 16\np = 0.592746\nn = 1500\nseed = 14\n"},
      {"conformal", "X = 1/20:19/20:1/20\nseed = 15\n"},
      {"oracle", "l = 2, 3\nX = 1/2\np = 1/2, 1/3\nseed = 16\n"},
      {"bisect", "l = 8, 12\nn = 1000\nlo = 0.3\nhi = 0.8\nseed = 17\n"},
  };
  int checked = 0;
  std::vector<std::string> differing;
  for (const auto& [command, body] : configs)
    for (const std::string format : {"csv", "json"}) {
      const std::string config = body + "format = " + format + "\n";
      const std::string name = command + "_" + format;
      const std::string w1 = run_cli(command, config, 1, name);
      const std::string w4 = run_cli(command, config, 4, name);
      ++checked;
      if (w1 != w4 || w1.empty()) differing.push_back(name);
      // verify re-runs the embedded config with yet another worker count
      else if (!verify_text(w1, 2).pass) differing.push_back(name + " (verify)");
    }
  std::string list;
  for (const auto& s : differing) list += " " + s;
  return {differing.empty(),
          fmt::format("{} experiment/format pairs at workers 1, 4 and verify at 2; differing:{}",
                      checked, differing.empty() ? " none" : list)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--cli", cli_path, "path of the perco executable")->required();
  app.add_option("criteria", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  scratch = fs::temp_directory_path() / fmt::format("perco_acceptance_{}", ::getpid());
  fs::create_directories(scratch);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"exact first-difference identity", criterion1},
      {"exact second-difference identity", criterion2},
      {"crossing xor blocking", criterion3},
      {"pathwise monotonicity", criterion4},
      {"sub/supercritical limits", criterion5},
      {"oracle vs Monte Carlo", criterion6},
      {"five-arm exponent", criterion7},
      {"half-plane exponents", criterion8},
      {"conformal self-checks", criterion9},
      {"crossing table l = 16..128", criterion10},
      {"determinism across workers", criterion11},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("criterion {:>2} {}: {}: {}", id, o.pass ? "PASS" : "FAIL",
                             criteria[k].first, o.detail)
              << std::endl;
  }
  fs::remove_all(scratch);
  return failures == 0 ? 0 : 1;
}
