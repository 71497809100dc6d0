#include "perco/runner.hpp"

#include "perco/arm_events.hpp"
#include "perco/conformal.hpp"
#include "perco/connectivity.hpp"
#include "perco/estimators.hpp"

#include <fmt/format.h>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <tuple>

namespace perco {

using json = nlohmann::ordered_json;

namespace {

const std::vector<std::pair<Experiment, std::vector<std::string>>>& experiment_names() {
  static const std::vector<std::pair<Experiment, std::vector<std::string>>> names = {
      {Experiment::Crossing, {"crossing", "crossing-scan"}},
      {Experiment::Profile, {"profile"}},
      {Experiment::Arms, {"arms", "arm-scan"}},
      {Experiment::SixArm, {"sixarm", "six-arm"}},
      {Experiment::Conformal, {"conformal"}},
      {Experiment::Oracle, {"oracle"}},
      {Experiment::Bisect, {"bisect", "bisection"}},
  };
  return names;
}

// Keys each experiment reads, in echo order.  experiment, seed, workers, out
// and format apply everywhere.
const std::vector<std::string>& keys_for(Experiment e) {
  static const std::map<Experiment, std::vector<std::string>> keys = {
      {Experiment::Crossing, {"mode", "variant", "l", "X", "p", "n"}},
      {Experiment::Profile, {"mode", "variant", "l", "p", "n", "exact"}},
      {Experiment::Oracle, {"mode", "variant", "l", "X", "p"}},
      {Experiment::Arms, {"mode", "variant", "r", "R", "arms", "p", "n"}},
      {Experiment::SixArm, {"mode", "variant", "r", "R", "c", "p", "n"}},
      {Experiment::Conformal, {"X", "tolerance", "measured"}},
      {Experiment::Bisect, {"mode", "variant", "l", "n", "tolerance", "lo", "hi"}},
  };
  return keys.at(e);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::string num(double v) { return fmt::format("{:.10g}", v); }

long long parse_integer(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v))
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

// "a, b, c" or "start:stop:step".
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const std::string& item : split_list(s)) {
    const auto parts = split_on(item, ':');
    if (parts.size() == 1) {
      out.push_back(static_cast<int>(parse_integer(item)));
    } else if (parts.size() == 3) {
      const long long a = parse_integer(parts[0]), b = parse_integer(parts[1]),
                      st = parse_integer(parts[2]);
      if (st <= 0) throw std::invalid_argument("range step must be positive");
      for (long long v = a; v <= b; v += st) out.push_back(static_cast<int>(v));
    } else {
      throw std::invalid_argument("bad list item '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

Rational to_rational(const ExactRational& e) {
  using boost::multiprecision::cpp_int;
  const cpp_int num = boost::multiprecision::numerator(e);
  const cpp_int den = boost::multiprecision::denominator(e);
  const cpp_int lim = std::numeric_limits<std::int32_t>::max();
  if (num > lim || den > lim) throw std::invalid_argument("fraction too fine");
  return Rational(num.convert_to<std::int64_t>(), den.convert_to<std::int64_t>());
}

std::vector<Rational> parse_fraction_list(const std::string& s) {
  std::vector<Rational> out;
  for (const std::string& item : split_list(s)) {
    const auto parts = split_on(item, ':');
    if (parts.size() == 1) {
      out.push_back(to_rational(parse_probability(item)));
    } else if (parts.size() == 3) {
      const Rational a = to_rational(parse_probability(parts[0]));
      const Rational b = to_rational(parse_probability(parts[1]));
      const Rational st = to_rational(parse_probability(parts[2]));
      if (st <= Rational(0)) throw std::invalid_argument("range step must be positive");
      for (Rational v = a; v <= b; v += st) out.push_back(v);
    } else {
      throw std::invalid_argument("bad list item '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::string fraction(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::string fraction(const ExactRational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ",";
    out += f(v[k]);
  }
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

TriangleDomain base_domain(Variant v, Rational split) {
  return v == Variant::Triangular ? TriangleDomain::equilateral_sheared(split)
                                  : TriangleDomain::isosceles(split);
}

std::string mesh_descriptor(const ExperimentConfig& cfg, int l) {
  return fmt::format("mode={},variant={},l={}", to_string(cfg.mode), to_string(cfg.variant), l);
}

void require_ls(const ExperimentConfig& cfg) {
  if (cfg.ls.empty()) throw std::invalid_argument("no mesh sizes given (key l)");
  for (int l : cfg.ls)
    if (l < 1) throw std::invalid_argument("mesh size l must be >= 1");
}

void require_n(const ExperimentConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("replicate count n must be >= 1");
}

// ---------------------------------------------------------------------------

struct Keyed {
  std::tuple<double, double, int, int> key;
  ResultRow row;
};

constexpr double kNone = -1.0;

class Table {
 public:
  Table(const ExperimentConfig& cfg, std::vector<std::string> extras)
      : cfg_(cfg), extras_(std::move(extras)) {}

  // Base cells in column order; see base_columns().
  struct Base {
    std::string l, x_num, x_den, p, n, successes, p_hat, ci_low, ci_high;
    bool lattice = true;
  };

  void add(const Base& b, std::vector<std::string> extras, double l, double x, int r, int R) {
    if (extras.size() != extras_.size()) throw std::logic_error("extra column count mismatch");
    ResultRow row;
    row.cells = {to_string(cfg_.experiment),
                 b.lattice ? to_string(cfg_.mode) : "",
                 b.lattice ? to_string(cfg_.variant) : "",
                 b.l,
                 b.x_num,
                 b.x_den,
                 b.p,
                 b.n,
                 b.successes,
                 b.p_hat,
                 b.ci_low,
                 b.ci_high,
                 std::to_string(cfg_.seed)};
    for (auto& e : extras) row.cells.push_back(std::move(e));
    rows_.push_back({{l, x, r, R}, std::move(row)});
  }

  ResultRecord finish(std::vector<std::string> notes) {
    std::stable_sort(rows_.begin(), rows_.end(),
                     [](const Keyed& a, const Keyed& b) { return a.key < b.key; });
    ResultRecord rec;
    rec.experiment = cfg_.experiment;
    rec.config = cfg_.echo();
    rec.notes = std::move(notes);
    rec.columns = base_columns();
    rec.columns.insert(rec.columns.end(), extras_.begin(), extras_.end());
    for (auto& k : rows_) rec.rows.push_back(std::move(k.row));
    return rec;
  }

 private:
  const ExperimentConfig& cfg_;
  std::vector<std::string> extras_;
  std::vector<Keyed> rows_;
};

Table::Base estimate_base(const Estimate& e) {
  Table::Base b;
  b.n = std::to_string(e.n);
  b.successes = std::to_string(e.successes);
  b.p_hat = num(e.p_hat);
  b.ci_low = num(e.ci_low);
  b.ci_high = num(e.ci_high);
  return b;
}

const std::string kWilsonNote = "ci_low/ci_high: Wilson 95% score interval";

ResultRecord run_crossing(const ExperimentConfig& cfg) {
  require_ls(cfg);
  require_n(cfg);
  Table t(cfg, {"pi_minus_X", "pi_minus_X89"});
  for (int l : cfg.ls) {
    const MeshSpec mesh(l, cfg.mode, cfg.variant);
    auto graph = std::make_shared<const LatticeGraph>(
        build_lattice(mesh, base_domain(cfg.variant, Rational(1, 2))));
    for (const Rational& x : cfg.xs) {
      const TriangleDomain d = base_domain(cfg.variant, x);
      auto events = std::make_shared<const TriangleEvents>(graph, d);
      const auto query = events->compile(Color::Open, Arc::AX, Arc::BC);
      const Detector detector = [events, query](const Configuration& c) {
        return events->holds(c, query);
      };
      const double xd = boost::rational_cast<double>(x);
      for (const std::string& ptext : cfg.ps) {
        const double p = to_double(parse_probability(ptext));
        const Estimate e = estimate(
            graph, detector, p, cfg.n, cfg.seed, cfg.workers,
            fmt::format("crossing:{},X={},p={}", mesh_descriptor(cfg, l), fraction(x), num(p)));
        Table::Base b = estimate_base(e);
        b.l = std::to_string(l);
        b.x_num = std::to_string(x.numerator());
        b.x_den = std::to_string(x.denominator());
        b.p = num(p);
        t.add(b, {num(e.p_hat - xd), num(e.p_hat - std::pow(xd, 8.0 / 9.0))}, l, xd, 0, 0);
      }
    }
  }
  return t.finish({kWilsonNote, "pi_minus_X89: p_hat - X^(8/9)"});
}

ResultRecord run_oracle(const ExperimentConfig& cfg) {
  require_ls(cfg);
  Table t(cfg, {"exact", "free_variables"});
  for (int l : cfg.ls) {
    const MeshSpec mesh(l, cfg.mode, cfg.variant);
    auto graph = std::make_shared<const LatticeGraph>(
        build_lattice(mesh, base_domain(cfg.variant, Rational(1, 2))));
    for (const Rational& x : cfg.xs) {
      const TriangleEvents events(graph, base_domain(cfg.variant, x));
      const auto query = events.compile(Color::Open, Arc::AX, Arc::BC);
      const auto support = events.support();
      const double xd = boost::rational_cast<double>(x);
      for (const std::string& ptext : cfg.ps) {
        const ExactRational p = parse_probability(ptext);
        const ExactRational value = exact_probability(
            graph, support, [&](const Configuration& c) { return events.holds(c, query); }, p);
        Table::Base b;
        b.l = std::to_string(l);
        b.x_num = std::to_string(x.numerator());
        b.x_den = std::to_string(x.denominator());
        b.p = num(to_double(p));
        b.p_hat = b.ci_low = b.ci_high = num(to_double(value));
        t.add(b, {fraction(value), std::to_string(support.size())}, l, xd, 0, 0);
      }
    }
  }
  return t.finish({"exact: probability by enumeration of every free variable; no sampling"});
}

ResultRecord run_profile(const ExperimentConfig& cfg) {
  require_ls(cfg);
  if (!cfg.exact) require_n(cfg);
  Table t(cfg, {"F", "F_low", "F_high", "G", "G_low", "G_high", "exact", "F_exact", "G_exact"});
  for (int l : cfg.ls) {
    const MeshSpec mesh(l, cfg.mode, cfg.variant);
    const TriangleDomain d = base_domain(cfg.variant, Rational(1, 2));
    for (const std::string& ptext : cfg.ps) {
      const ExactRational pe = parse_probability(ptext);
      const double p = to_double(pe);
      const Profile prof = cfg.exact ? separating_profile_exact(mesh, d, pe)
                                     : separating_profile_mc(mesh, d, p, cfg.n, cfg.seed,
                                                             cfg.workers);
      for (const ProfilePoint& pt : prof.points) {
        const Rational zx(pt.z, prof.steps);
        Table::Base b;
        b.l = std::to_string(l);
        b.x_num = std::to_string(zx.numerator());
        b.x_den = std::to_string(zx.denominator());
        b.p = num(p);
        b.p_hat = num(pt.value);
        b.ci_low = num(pt.ci_low);
        b.ci_high = num(pt.ci_high);
        if (!cfg.exact) {
          b.n = std::to_string(prof.n);
          b.successes = std::to_string(pt.successes);
        }
        std::vector<std::string> ex(9);
        if (pt.z >= 1) {
          const Difference f = first_difference(prof, pt.z - 1, pt.z);
          ex[0] = num(f.value);
          ex[1] = num(f.ci_low);
          ex[2] = num(f.ci_high);
          if (f.exact) ex[7] = fraction(*f.exact);
        }
        if (pt.z >= 1 && pt.z + 1 <= prof.steps) {
          const Difference g = second_difference(prof, pt.z - 1, pt.z, pt.z + 1);
          ex[3] = num(g.value);
          ex[4] = num(g.ci_low);
          ex[5] = num(g.ci_high);
          if (g.exact) ex[8] = fraction(*g.exact);
        }
        if (pt.exact) ex[6] = fraction(*pt.exact);
        t.add(b, std::move(ex), l, boost::rational_cast<double>(zx), 0, 0);
      }
    }
  }
  return t.finish({"X_num/X_den: the point Z on AB as a fraction of AB",
                   "F: l (f(Z) - f(Z - 1/l)); G: l^2 (f(Z + 1/l) - 2 f(Z) + f(Z - 1/l))",
                   cfg.exact ? "exact: enumeration of every free variable"
                             : "common random numbers: one configuration per replicate serves "
                               "every Z; " + kWilsonNote});
}

ResultRecord run_arms(const ExperimentConfig& cfg) {
  require_n(cfg);
  if (cfg.arms.empty()) throw std::invalid_argument("no arm events given (key arms)");
  std::vector<ArmSpec> specs;
  for (int R : cfg.R_list)
    for (int r : cfg.r_list)
      for (const ArmRequest& a : cfg.arms) {
        ArmSpec s{r, R, a.open_arms, a.closed_arms, parse_arm_geometry(a.geometry)};
        validate(s);
        specs.push_back(s);
      }
  Table t(cfg, {"r", "R", "geometry", "open_arms", "closed_arms", "slope", "slope_stderr"});
  for (const std::string& ptext : cfg.ps) {
    const double p = to_double(parse_probability(ptext));
    const auto rows = arm_scan(cfg.mode, cfg.variant, specs, p, cfg.n, cfg.seed, cfg.workers);
    for (const ArmScanRow& row : rows) {
      std::string slope, stderr_slope;
      try {
        const FitResult fit = exponent_fit(
            fit_rows(rows, row.spec.open_arms, row.spec.closed_arms, row.spec.geometry));
        slope = num(fit.slope);
        stderr_slope = num(fit.stderr_slope);
      } catch (const std::exception&) {
        // fewer than two ratios or a zero count: no slope for this group
      }
      Table::Base b = estimate_base(row.estimate);
      b.p = num(p);
      t.add(b,
            {std::to_string(row.spec.r), std::to_string(row.spec.R),
             to_string(row.spec.geometry), std::to_string(row.spec.open_arms),
             std::to_string(row.spec.closed_arms), slope, stderr_slope},
            kNone, kNone, row.spec.r, row.spec.R);
    }
  }
  return t.finish({kWilsonNote,
                   "slope: weighted least squares of log p_hat on log(r/R) over rows with the "
                   "same geometry and arm counts",
                   "arms: i open and j closed crossings of the annulus between boxes of "
                   "half-width r and R"});
}

ResultRecord run_sixarm(const ExperimentConfig& cfg) {
  require_n(cfg);
  Table t(cfg, {"r", "R", "c", "event"});
  for (const std::string& ptext : cfg.ps) {
    const double p = to_double(parse_probability(ptext));
    for (int R : cfg.R_list)
      for (int r : cfg.r_list) {
        const CoarseScanRow row =
            coarse_scan(cfg.mode, cfg.variant, r, R, cfg.c, p, cfg.n, cfg.seed, cfg.workers);
        for (const auto& [name, e] : {std::pair<std::string, const Estimate*>{"six", &row.six},
                                      {"five", &row.five}}) {
          Table::Base b = estimate_base(*e);
          b.p = num(p);
          t.add(b, {std::to_string(r), std::to_string(R), num(cfg.c), name}, kNone, kNone, r, R);
        }
      }
  }
  return t.finish({kWilsonNote,
                   "event six: some square of side r inside [-cR, cR]^2 has six arms (three "
                   "open, three closed) to distance R; five: the same with (3, 2)"});
}

ResultRecord run_conformal(const ExperimentConfig& cfg) {
  std::vector<double> grid;
  for (const Rational& x : cfg.xs) grid.push_back(boost::rational_cast<double>(x));
  std::vector<std::optional<double>> measured;
  for (double m : cfg.measured) measured.push_back(m);
  const auto rows = cardy_comparison(grid, cfg.tolerance, measured);
  Table t(cfg, {"X", "psi_printed", "psi_angle", "X89", "measured"});
  for (const CardyRow& row : rows) {
    Table::Base b;
    b.lattice = false;
    t.add(b,
          {num(row.X), num(row.psi_printed), num(row.psi_angle), num(row.power),
           row.measured ? num(*row.measured) : ""},
          kNone, row.X, 0, 0);
  }
  return t.finish({"maps normalized by map(0) = 0 and map(1) = 1",
                   "psi_printed: triangle map with exponents (-3/4, 3/4); psi_angle: "
                   "exponents (-3/4, -3/4); both composed with the equilateral map "
                   "(-2/3, -2/3)",
                   "X89: X^(8/9)"});
}

ResultRecord run_bisect(const ExperimentConfig& cfg) {
  require_ls(cfg);
  require_n(cfg);
  const auto results = critical_bisection(cfg.ls, cfg.mode, cfg.variant, cfg.n, cfg.seed,
                                          cfg.workers, cfg.tolerance, cfg.lo, cfg.hi);
  Table t(cfg, {"iterations", "default_critical"});
  for (const BisectionResult& r : results) {
    Table::Base b;
    b.l = std::to_string(r.l);
    b.p = num(r.p);
    b.n = std::to_string(r.n);
    b.ci_low = num(r.ci_low);
    b.ci_high = num(r.ci_high);
    t.add(b, {std::to_string(r.iterations), num(default_critical(cfg.mode, cfg.variant))}, r.l,
          kNone, 0, 0);
  }
  return t.finish({"p: bisected crossing point of an l-box; ci from replicate threshold "
                   "order statistics"});
}

// ---------------------------------------------------------------------------
// Rendering.

bool is_json_number(const std::string& cell) {
  if (cell.empty()) return false;
  if (!json::accept(cell)) return false;
  return json::parse(cell).is_number();
}

std::string render_csv(const ResultRecord& rec) {
  std::string out;
  out += fmt::format("# schema_version={}\n", kSchemaVersion);
  out += fmt::format("# toolkit_version={}\n", kToolkitVersion);
  out += fmt::format("# experiment={}\n", to_string(rec.experiment));
  for (const auto& [k, v] : rec.config) out += fmt::format("# config.{}={}\n", k, v);
  for (const auto& note : rec.notes) out += fmt::format("# note={}\n", note);
  out += join(rec.columns, [](const std::string& s) { return s; }) + "\n";
  for (const ResultRow& row : rec.rows) {
    for (const auto& cell : row.cells)
      if (cell.find_first_of(",\n\"") != std::string::npos)
        throw std::logic_error("cell needs quoting: " + cell);
    out += join(row.cells, [](const std::string& s) { return s; }) + "\n";
  }
  return out;
}

std::string render_json(const ResultRecord& rec) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["toolkit_version"] = kToolkitVersion;
  j["experiment"] = to_string(rec.experiment);
  json config = json::object();
  for (const auto& [k, v] : rec.config) config[k] = v;
  j["config"] = config;
  j["notes"] = rec.notes;
  j["columns"] = rec.columns;
  json rows = json::array();
  for (const ResultRow& row : rec.rows) {
    json r = json::object();
    for (std::size_t k = 0; k < row.cells.size(); ++k) {
      const std::string& cell = row.cells[k];
      if (cell.empty())
        r[rec.columns[k]] = nullptr;
      else if (is_json_number(cell))
        r[rec.columns[k]] = json::parse(cell);
      else
        r[rec.columns[k]] = cell;
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(1) + "\n";
}

std::string cell_text(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

ResultRecord parse_json_record(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt JSON record: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version") || !j.contains("config") ||
      !j.contains("rows") || !j.contains("columns") || !j.contains("experiment"))
    throw std::runtime_error("corrupt record: missing schema_version, experiment, config, "
                             "columns or rows");
  if (j["schema_version"] != kSchemaVersion)
    throw std::runtime_error("unsupported schema_version " + j["schema_version"].dump());
  ResultRecord rec;
  rec.experiment = parse_experiment(j["experiment"].get<std::string>());
  for (const auto& [k, v] : j["config"].items()) rec.config.emplace_back(k, v.get<std::string>());
  if (j.contains("notes"))
    for (const auto& n : j["notes"]) rec.notes.push_back(n.get<std::string>());
  for (const auto& c : j["columns"]) rec.columns.push_back(c.get<std::string>());
  for (const auto& r : j["rows"]) {
    ResultRow row;
    for (const auto& c : rec.columns) {
      if (!r.contains(c)) throw std::runtime_error("corrupt record: row lacks column " + c);
      row.cells.push_back(cell_text(r[c]));
    }
    rec.rows.push_back(std::move(row));
  }
  return rec;
}

ResultRecord parse_csv_record(const std::string& text) {
  ResultRecord rec;
  std::istringstream is(text);
  std::string line;
  bool have_schema = false, have_experiment = false;
  while (std::getline(is, line)) {
    if (line.rfind("# ", 0) == 0) {
      const std::string body = line.substr(2);
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw std::runtime_error("corrupt header line: " + line);
      const std::string key = body.substr(0, eq), value = body.substr(eq + 1);
      if (key == "schema_version") {
        if (value != std::to_string(kSchemaVersion))
          throw std::runtime_error("unsupported schema_version " + value);
        have_schema = true;
      } else if (key == "experiment") {
        rec.experiment = parse_experiment(value);
        have_experiment = true;
      } else if (key.rfind("config.", 0) == 0) {
        rec.config.emplace_back(key.substr(7), value);
      } else if (key == "note") {
        rec.notes.push_back(value);
      }
      continue;
    }
    if (rec.columns.empty()) {
      rec.columns = split_on(line, ',');
      continue;
    }
    ResultRow row;
    row.cells = split_on(line, ',');
    if (row.cells.size() != rec.columns.size())
      throw std::runtime_error("corrupt record: row " + std::to_string(rec.rows.size() + 1) +
                               " has " + std::to_string(row.cells.size()) + " cells, expected " +
                               std::to_string(rec.columns.size()));
    rec.rows.push_back(std::move(row));
  }
  if (!have_schema || !have_experiment || rec.columns.empty())
    throw std::runtime_error("corrupt record: missing schema_version, experiment or columns");
  return rec;
}

bool looks_like_json(const std::string& text) {
  const auto k = text.find_first_not_of(" \t\r\n");
  return k != std::string::npos && text[k] == '{';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Experiment e) {
  for (const auto& [k, names] : experiment_names())
    if (k == e) return names.front();
  throw std::invalid_argument("unknown experiment");
}

Experiment parse_experiment(const std::string& s) {
  for (const auto& [k, names] : experiment_names())
    if (std::find(names.begin(), names.end(), s) != names.end()) return k;
  throw std::invalid_argument("unknown experiment '" + s + "'");
}

std::string to_string(OutputFormat f) { return f == OutputFormat::Csv ? "csv" : "json"; }

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw std::invalid_argument("unknown format '" + s + "' (csv or json)");
}

ExperimentConfig defaults_for(Experiment e) {
  ExperimentConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::Crossing:
      c.ls = {16, 32, 64};
      c.xs = {Rational(1, 4), Rational(1, 2), Rational(3, 4)};
      c.ps = {"0.5"};
      c.n = 20000;
      break;
    case Experiment::Profile:
      c.mode = Mode::Site;
      c.ls = {4};
      c.ps = {"1/2"};
      c.n = 10000;
      break;
    case Experiment::Oracle:
      c.ls = {3};
      c.xs = {Rational(1, 2)};
      c.ps = {"1/2"};
      break;
    case Experiment::Arms:
      c.r_list = {4, 8, 16};
      c.R_list = {64};
      c.arms = {{"whole", 3, 2}, {"half", 1, 1}, {"half", 2, 1}};
      c.ps = {"0.5"};
      c.n = 10000;
      break;
    case Experiment::SixArm:
      c.r_list = {4};
      c.R_list = {16};
      c.ps = {"0.5"};
      c.n = 10000;
      break;
    case Experiment::Conformal:
      for (int k = 1; k <= 19; ++k) c.xs.push_back(Rational(k, 20));
      break;
    case Experiment::Bisect:
      c.ls = {16, 32};
      c.n = 2000;
      c.tolerance = 1e-3;
      c.lo = 0.3;
      c.hi = 0.8;
      break;
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("experiment", to_string(experiment));
  for (const std::string& key : keys_for(experiment)) {
    std::string v;
    if (key == "mode") v = to_string(mode);
    else if (key == "variant") v = to_string(variant);
    else if (key == "l") v = join(ls, [](int x) { return std::to_string(x); });
    else if (key == "X") v = join(xs, [](const Rational& x) { return fraction(x); });
    else if (key == "p") v = join(ps, [](const std::string& x) { return x; });
    else if (key == "n") v = std::to_string(n);
    else if (key == "exact") v = exact ? "true" : "false";
    else if (key == "r") v = join(r_list, [](int x) { return std::to_string(x); });
    else if (key == "R") v = join(R_list, [](int x) { return std::to_string(x); });
    else if (key == "arms")
      v = join(arms, [](const ArmRequest& a) {
        return fmt::format("{}:{}:{}", a.geometry, a.open_arms, a.closed_arms);
      });
    else if (key == "c") v = num(c);
    else if (key == "tolerance") v = num(tolerance);
    else if (key == "measured") v = join(measured, num);
    else if (key == "lo") v = num(lo);
    else if (key == "hi") v = num(hi);
    out.emplace_back(key, v);
  }
  out.emplace_back("seed", std::to_string(seed));
  return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      int line) {
  const std::string where =
      (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + "key '" + key + "'";
  static const std::set<std::string> common = {"experiment", "seed", "workers", "out", "format"};
  const auto& keys = keys_for(cfg.experiment);
  if (!common.count(key) && std::find(keys.begin(), keys.end(), key) == keys.end()) {
    static const std::set<std::string> known = {"mode", "variant", "l", "X", "p", "n",
                                                "exact", "r", "R", "arms", "c", "tolerance",
                                                "measured", "lo", "hi"};
    if (known.count(key))
      throw ConfigError(where + ": does not apply to experiment " + to_string(cfg.experiment));
    throw ConfigError(where + ": unknown key");
  }
  try {
    if (key == "experiment") {
      if (parse_experiment(value) != cfg.experiment)
        throw std::invalid_argument("conflicts with experiment " + to_string(cfg.experiment));
    } else if (key == "seed") {
      if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("seed must be a non-negative integer");
      cfg.seed = std::stoull(value);
    } else if (key == "workers") {
      const long long w = parse_integer(value);
      if (w < 0) throw std::invalid_argument("workers must be >= 0");
      cfg.workers = static_cast<unsigned>(w);
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "format") {
      cfg.format = parse_format(value);
    } else if (key == "mode") {
      cfg.mode = parse_mode(value);
    } else if (key == "variant") {
      cfg.variant = parse_variant(value);
    } else if (key == "l") {
      cfg.ls = parse_int_list(value);
    } else if (key == "X") {
      cfg.xs = parse_fraction_list(value);
    } else if (key == "p") {
      cfg.ps = split_list(value);
      if (cfg.ps.empty()) throw std::invalid_argument("empty list");
      for (const auto& p : cfg.ps) parse_probability(p);
    } else if (key == "n") {
      const long long n = parse_integer(value);
      if (n < 1) throw std::invalid_argument("n must be >= 1");
      cfg.n = static_cast<std::uint64_t>(n);
    } else if (key == "exact") {
      cfg.exact = parse_bool(value);
    } else if (key == "r") {
      cfg.r_list = parse_int_list(value);
    } else if (key == "R") {
      cfg.R_list = parse_int_list(value);
    } else if (key == "arms") {
      cfg.arms.clear();
      for (const std::string& item : split_list(value)) {
        const auto parts = split_on(item, ':');
        if (parts.size() != 3)
          throw std::invalid_argument("arm item '" + item + "' is not geometry:open:closed");
        ArmRequest a{to_string(parse_arm_geometry(parts[0])),
                     static_cast<int>(parse_integer(parts[1])),
                     static_cast<int>(parse_integer(parts[2]))};
        cfg.arms.push_back(a);
      }
      if (cfg.arms.empty()) throw std::invalid_argument("empty list");
    } else if (key == "c") {
      cfg.c = parse_real(value);
    } else if (key == "tolerance") {
      cfg.tolerance = parse_real(value);
    } else if (key == "measured") {
      cfg.measured.clear();
      for (const auto& m : split_list(value)) cfg.measured.push_back(parse_real(m));
    } else if (key == "lo") {
      cfg.lo = parse_real(value);
    } else if (key == "hi") {
      cfg.hi = parse_real(value);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, std::optional<Experiment> fallback) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::optional<Experiment> named;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected key = value, got '" + body +
                        "'");
    Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("line " + std::to_string(line) + ": missing key");
    if (!seen.insert(e.key).second)
      throw ConfigError("line " + std::to_string(line) + ": key '" + e.key + "' repeated");
    if (e.key == "experiment") {
      try {
        named = parse_experiment(e.value);
      } catch (const std::exception& ex) {
        throw ConfigError("line " + std::to_string(line) + ": key 'experiment': " + ex.what());
      }
      if (fallback && *named != *fallback)
        throw ConfigError("line " + std::to_string(line) + ": key 'experiment': config is for " +
                          to_string(*named) + " but the command is " + to_string(*fallback));
    }
    entries.push_back(std::move(e));
  }
  if (!named && !fallback) throw ConfigError("no experiment given (key experiment)");
  ExperimentConfig cfg = defaults_for(named ? *named : *fallback);
  for (const Entry& e : entries) set_config_value(cfg, e.key, e.value, e.line);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<Experiment> fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fallback);
}

const std::vector<std::string>& base_columns() {
  static const std::vector<std::string> cols = {
      "experiment", "mode",      "variant", "l",      "X_num",   "X_den", "p",
      "n",          "successes", "p_hat",   "ci_low", "ci_high", "seed"};
  return cols;
}

ResultRecord run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::Crossing: return run_crossing(cfg);
    case Experiment::Profile: return run_profile(cfg);
    case Experiment::Arms: return run_arms(cfg);
    case Experiment::SixArm: return run_sixarm(cfg);
    case Experiment::Conformal: return run_conformal(cfg);
    case Experiment::Oracle: return run_oracle(cfg);
    case Experiment::Bisect: return run_bisect(cfg);
  }
  throw std::invalid_argument("unknown experiment");
}

std::string render(const ResultRecord& record, OutputFormat format) {
  return format == OutputFormat::Csv ? render_csv(record) : render_json(record);
}

ResultRecord parse_record(const std::string& text) {
  return looks_like_json(text) ? parse_json_record(text) : parse_csv_record(text);
}

std::string run(const ExperimentConfig& cfg) {
  const std::string text = render(run_experiment(cfg), cfg.format);
  if (!cfg.out.empty()) {
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + cfg.out);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + cfg.out);
  }
  return text;
}

VerifyReport verify_text(const std::string& text, unsigned workers) {
  const ResultRecord stored = parse_record(text);
  ExperimentConfig cfg = defaults_for(stored.experiment);
  for (const auto& [k, v] : stored.config) set_config_value(cfg, k, v);
  cfg.workers = workers;
  cfg.format = looks_like_json(text) ? OutputFormat::Json : OutputFormat::Csv;
  const ResultRecord fresh = run_experiment(cfg);
  const std::string again = render(fresh, cfg.format);
  if (again == text) return {true, fmt::format("pass: {} rows reproduced", fresh.rows.size())};

  if (stored.columns != fresh.columns) return {false, "fail: column list differs"};
  for (std::size_t r = 0; r < std::min(stored.rows.size(), fresh.rows.size()); ++r)
    for (std::size_t k = 0; k < fresh.columns.size(); ++k)
      if (stored.rows[r].cells[k] != fresh.rows[r].cells[k])
        return {false, fmt::format("fail: row {} column {}: stored '{}', re-run gives '{}'", r + 1,
                                   fresh.columns[k], stored.rows[r].cells[k],
                                   fresh.rows[r].cells[k])};
  if (stored.rows.size() != fresh.rows.size())
    return {false, fmt::format("fail: stored {} rows, re-run gives {}", stored.rows.size(),
                               fresh.rows.size())};
  // Rows agree; the difference is in the header or layout.
  std::istringstream a(text), b(again);
  std::string la, lb;
  for (int line = 1;; ++line) {
    const bool ga = static_cast<bool>(std::getline(a, la));
    const bool gb = static_cast<bool>(std::getline(b, lb));
    if (!ga && !gb) break;
    if (!ga || !gb || la != lb)
      return {false, fmt::format("fail: line {} differs: stored '{}', re-run gives '{}'", line,
                                 ga ? la : "", gb ? lb : "")};
  }
  return {false, "fail: trailing bytes differ"};
}

VerifyReport verify(const std::string& path, unsigned workers) {
  return verify_text(read_file(path), workers);
}

}  // namespace perco
