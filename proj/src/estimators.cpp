#include "perco/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace perco {

std::array<double, 2> wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
  if (n == 0) throw std::invalid_argument("wilson interval needs n >= 1");
  if (successes > n) throw std::invalid_argument("successes exceed n");
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (ph + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
  // clamp rounding so that lo <= p_hat <= hi always holds
  double lo = std::max(0.0, centre - half);
  double hi = std::min(1.0, centre + half);
  if (successes == 0) lo = 0.0;
  if (successes == n) hi = 1.0;
  return {std::min(lo, ph), std::max(hi, ph)};
}

Estimate make_estimate(std::uint64_t successes, std::uint64_t n, std::uint64_t seed,
                       std::string descriptor) {
  const auto ci = wilson_interval(successes, n);
  Estimate e;
  e.n = n;
  e.successes = successes;
  e.p_hat = static_cast<double>(successes) / static_cast<double>(n);
  e.ci_low = ci[0];
  e.ci_high = ci[1];
  e.seed = seed;
  e.descriptor = std::move(descriptor);
  return e;
}

unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::size_t chunk_count(std::uint64_t n) {
  return static_cast<std::size_t>(std::min<std::uint64_t>(n, 256));
}

void for_each_chunk(std::uint64_t n, unsigned workers,
                    const std::function<void(std::uint64_t, std::uint64_t, std::size_t)>& body) {
  const std::size_t chunks = chunk_count(n);
  if (chunks == 0) return;
  auto bounds = [&](std::size_t k) {
    return std::array<std::uint64_t, 2>{n * k / chunks, n * (k + 1) / chunks};
  };
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), chunks));
  if (threads <= 1) {
    for (std::size_t k = 0; k < chunks; ++k) {
      const auto b = bounds(k);
      body(b[0], b[1], k);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= chunks) return;
      try {
        const auto b = bounds(k);
        body(b[0], b[1], k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(chunks);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Estimate estimate(const std::shared_ptr<const LatticeGraph>& graph, const Detector& event,
                  double p, std::uint64_t n, std::uint64_t seed, unsigned workers,
                  std::string descriptor) {
  if (n < 1) throw std::invalid_argument("estimate needs n >= 1");
  check_probability(p);
  std::vector<std::uint64_t> hits(chunk_count(n), 0);
  for_each_chunk(n, workers, [&](std::uint64_t begin, std::uint64_t end, std::size_t k) {
    Configuration c(graph);
    std::uint64_t s = 0;
    for (std::uint64_t t = begin; t < end; ++t) {
      sample_into(c, p, seed, t);
      if (event(c)) ++s;
    }
    hits[k] = s;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  return make_estimate(total, n, seed, std::move(descriptor));
}

std::vector<ExactRational> exact_probabilities(const std::shared_ptr<const LatticeGraph>& graph,
                                               const std::vector<int>& free_variables,
                                               const std::vector<Detector>& events,
                                               const ExactRational& p, std::size_t cap) {
  if (p < 0 || p > 1) throw std::invalid_argument("p must lie in [0, 1]");
  const Enumeration e(graph, free_variables, cap);
  std::vector<std::vector<std::uint64_t>> counts(
      events.size(), std::vector<std::uint64_t>(e.free_count() + 1, 0));
  e.for_each([&](const Configuration& c, int open) {
    for (std::size_t k = 0; k < events.size(); ++k)
      if (events[k](c)) ++counts[k][static_cast<std::size_t>(open)];
  });
  std::vector<ExactRational> out;
  out.reserve(events.size());
  for (const auto& cnt : counts) out.push_back(weighted_sum(cnt, p));
  return out;
}

ExactRational exact_probability(const std::shared_ptr<const LatticeGraph>& graph,
                                const std::vector<int>& free_variables, const Detector& event,
                                const ExactRational& p, std::size_t cap) {
  return exact_probabilities(graph, free_variables, {event}, p, cap).front();
}

ExactRational parse_probability(const std::string& text) {
  auto fail = [&] { throw std::invalid_argument("not a probability: '" + text + "'"); };
  if (text.empty()) fail();
  ExactRational r;
  const auto slash = text.find('/');
  auto digits = [&](const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
      fail();
    return boost::multiprecision::cpp_int(s);
  };
  if (slash != std::string::npos) {
    const auto den = digits(text.substr(slash + 1));
    if (den == 0) fail();
    r = ExactRational(digits(text.substr(0, slash)), den);
  } else {
    const auto dot = text.find('.');
    std::string whole = text.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (frac.empty() && dot != std::string::npos) fail();
    boost::multiprecision::cpp_int scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    r = ExactRational(digits(whole)) + (frac.empty() ? ExactRational(0) : ExactRational(digits(frac), scale));
  }
  if (r > 1) fail();
  return r;
}

double to_double(const ExactRational& r) { return r.convert_to<double>(); }

// ---------------------------------------------------------------------------

double Profile::at(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("profile position must lie in [0, 1]");
  if (points.empty()) throw std::logic_error("empty profile");
  const double s = u * steps;
  const int k = std::min(static_cast<int>(std::floor(s)), steps);
  if (k >= steps) return points.back().value;
  const double t = s - k;
  return (1.0 - t) * points[static_cast<std::size_t>(k)].value +
         t * points[static_cast<std::size_t>(k + 1)].value;
}

Profile separating_profile_exact(const MeshSpec& mesh, const TriangleDomain& domain,
                                 const ExactRational& p, std::size_t cap) {
  auto graph = std::make_shared<const LatticeGraph>(build_lattice(mesh, domain));
  const TriangleEvents events(graph, domain);
  const int steps = events.ab_steps();
  const Enumeration e(graph, events.support(), cap);
  // counts[J][k]: assignments with k open variables whose first separating point is J
  std::vector<std::vector<std::uint64_t>> counts(
      static_cast<std::size_t>(steps + 2), std::vector<std::uint64_t>(e.free_count() + 1, 0));
  TriangleEvents::Labels labels;
  e.for_each([&](const Configuration& c, int open) {
    events.label(c, Color::Open, labels);
    ++counts[static_cast<std::size_t>(events.first_separating(labels))][static_cast<std::size_t>(open)];
  });
  Profile out;
  out.l = mesh.l();
  out.steps = steps;
  out.exact = true;
  out.n = e.count();
  ExactRational running = 0;
  std::uint64_t running_count = 0;
  for (int z = 0; z <= steps; ++z) {
    running += weighted_sum(counts[static_cast<std::size_t>(z)], p);
    for (auto c : counts[static_cast<std::size_t>(z)]) running_count += c;
    ProfilePoint pt;
    pt.z = z;
    pt.exact = running;
    pt.value = pt.ci_low = pt.ci_high = to_double(running);
    pt.successes = running_count;
    out.points.push_back(pt);
  }
  return out;
}

Profile separating_profile_mc(const MeshSpec& mesh, const TriangleDomain& domain, double p,
                              std::uint64_t n, std::uint64_t seed, unsigned workers) {
  if (n < 1) throw std::invalid_argument("profile needs n >= 1");
  check_probability(p);
  auto graph = std::make_shared<const LatticeGraph>(build_lattice(mesh, domain));
  const TriangleEvents events(graph, domain);
  const int steps = events.ab_steps();
  const std::size_t bins = static_cast<std::size_t>(steps + 2);
  std::vector<std::vector<std::uint64_t>> partial(chunk_count(n));
  for_each_chunk(n, workers, [&](std::uint64_t begin, std::uint64_t end, std::size_t k) {
    std::vector<std::uint64_t> local(bins, 0);
    Configuration c(graph);
    TriangleEvents::Labels labels;
    for (std::uint64_t t = begin; t < end; ++t) {
      sample_into(c, p, seed, t);
      events.label(c, Color::Open, labels);
      ++local[static_cast<std::size_t>(events.first_separating(labels))];
    }
    partial[k] = std::move(local);
  });
  Profile out;
  out.l = mesh.l();
  out.steps = steps;
  out.n = n;
  out.seed = seed;
  out.first_counts.assign(bins, 0);
  for (const auto& part : partial)
    for (std::size_t b = 0; b < bins; ++b) out.first_counts[b] += part[b];
  std::uint64_t running = 0;
  for (int z = 0; z <= steps; ++z) {
    running += out.first_counts[static_cast<std::size_t>(z)];
    const auto ci = wilson_interval(running, n);
    ProfilePoint pt;
    pt.z = z;
    pt.successes = running;
    pt.value = static_cast<double>(running) / static_cast<double>(n);
    pt.ci_low = ci[0];
    pt.ci_high = ci[1];
    out.points.push_back(pt);
  }
  return out;
}

namespace {

const ProfilePoint& point_at(const Profile& profile, int z) {
  if (z < 0 || z > profile.steps || static_cast<std::size_t>(z) >= profile.points.size())
    throw std::out_of_range("grid point " + std::to_string(z) + " outside the profile");
  return profile.points[static_cast<std::size_t>(z)];
}

}  // namespace

Difference first_difference(const Profile& profile, int zbar, int z) {
  if (z != zbar + 1) throw std::invalid_argument("first difference needs adjacent points");
  const ProfilePoint& a = point_at(profile, zbar);
  const ProfilePoint& b = point_at(profile, z);
  const double l = profile.l;
  Difference d;
  if (profile.exact && a.exact && b.exact) {
    d.exact = ExactRational(profile.l) * (*b.exact - *a.exact);
    d.value = d.ci_low = d.ci_high = to_double(*d.exact);
  } else if (!profile.first_counts.empty()) {
    const std::uint64_t hits = profile.first_counts[static_cast<std::size_t>(z)];
    const auto ci = wilson_interval(hits, profile.n);
    d.value = l * static_cast<double>(hits) / static_cast<double>(profile.n);
    d.ci_low = l * ci[0];
    d.ci_high = l * ci[1];
  } else {
    d.value = d.ci_low = d.ci_high = l * (b.value - a.value);
  }
  return d;
}

Difference second_difference(const Profile& profile, int zhat, int zbar, int z) {
  if (zbar != zhat + 1 || z != zbar + 1)
    throw std::invalid_argument("second difference needs three adjacent points");
  const ProfilePoint& a = point_at(profile, zhat);
  const ProfilePoint& b = point_at(profile, zbar);
  const ProfilePoint& c = point_at(profile, z);
  const double l2 = static_cast<double>(profile.l) * profile.l;
  Difference d;
  if (profile.exact && a.exact && b.exact && c.exact) {
    d.exact = ExactRational(profile.l * profile.l) * (*c.exact - 2 * *b.exact + *a.exact);
    d.value = d.ci_low = d.ci_high = to_double(*d.exact);
  } else if (!profile.first_counts.empty()) {
    // (count at z - count at zbar) / n of a multinomial sample
    const double n = static_cast<double>(profile.n);
    const double p1 = static_cast<double>(profile.first_counts[static_cast<std::size_t>(z)]) / n;
    const double p2 = static_cast<double>(profile.first_counts[static_cast<std::size_t>(zbar)]) / n;
    const double se = std::sqrt(std::max(0.0, p1 + p2 - (p1 - p2) * (p1 - p2)) / n);
    d.value = l2 * (p1 - p2);
    d.ci_low = d.value - kZ95 * l2 * se;
    d.ci_high = d.value + kZ95 * l2 * se;
  } else {
    d.value = d.ci_low = d.ci_high = l2 * (c.value - 2.0 * b.value + a.value);
  }
  return d;
}

// ---------------------------------------------------------------------------

FitResult exponent_fit(const std::vector<FitRow>& rows) {
  std::map<double, std::array<std::uint64_t, 2>> pooled;
  for (const FitRow& r : rows) {
    auto& slot = pooled[r.ratio];
    slot[0] += r.successes;
    slot[1] += r.n;
  }
  std::vector<FitPoint> points;
  for (const auto& [ratio, sn] : pooled) {
    if (sn[1] == 0) throw std::invalid_argument("fit row with n = 0");
    if (sn[0] == 0)
      throw std::invalid_argument("zero successes at ratio " + std::to_string(ratio) +
                                  "; increase n");
    const auto ci = wilson_interval(sn[0], sn[1]);
    FitPoint pt;
    pt.ratio = ratio;
    pt.value = static_cast<double>(sn[0]) / static_cast<double>(sn[1]);
    pt.sigma_log = (std::log(ci[1]) - std::log(ci[0])) / (2.0 * kZ95);
    points.push_back(pt);
  }
  return exponent_fit(points);
}

FitResult exponent_fit(const std::vector<FitPoint>& points) {
  std::map<double, FitPoint> distinct;
  for (const FitPoint& p : points) {
    if (!(p.ratio > 0.0)) throw std::invalid_argument("fit ratios must be positive");
    if (!(p.value > 0.0))
      throw std::invalid_argument("zero estimate at ratio " + std::to_string(p.ratio) +
                                  "; increase n");
    distinct[p.ratio] = p;
  }
  if (distinct.size() != points.size())
    throw std::invalid_argument("duplicate ratios; pool them first");
  if (points.size() < 2) throw std::invalid_argument("exponent fit needs at least 2 ratios");
  const bool weighted = std::any_of(points.begin(), points.end(),
                                    [](const FitPoint& p) { return p.sigma_log > 0.0; });
  double sw = 0, sx = 0, sy = 0;
  for (const FitPoint& p : points) {
    if (weighted && !(p.sigma_log > 0.0))
      throw std::invalid_argument("weighted fit needs sigma_log > 0 for every point");
    const double w = weighted ? 1.0 / (p.sigma_log * p.sigma_log) : 1.0;
    sw += w;
    sx += w * std::log(p.ratio);
    sy += w * std::log(p.value);
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (const FitPoint& p : points) {
    const double w = weighted ? 1.0 / (p.sigma_log * p.sigma_log) : 1.0;
    const double dx = std::log(p.ratio) - mx;
    sxx += w * dx * dx;
    sxy += w * dx * (std::log(p.value) - my);
  }
  FitResult out;
  out.points = points.size();
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (weighted) {
    out.stderr_slope = 1.0 / std::sqrt(sxx);
  } else if (points.size() > 2) {
    double ssr = 0;
    for (const FitPoint& p : points) {
      const double r = std::log(p.value) - out.intercept - out.slope * std::log(p.ratio);
      ssr += r * r;
    }
    out.stderr_slope = std::sqrt(ssr / static_cast<double>(points.size() - 2) / sxx);
  }
  return out;
}

// ---------------------------------------------------------------------------

double default_critical(Mode mode, Variant variant) {
  if (mode == Mode::Site && variant == Variant::Square) return 0.592746;
  return 0.5;
}

std::vector<BisectionResult> critical_bisection(const std::vector<int>& ls, Mode mode,
                                                Variant variant, std::uint64_t n,
                                                std::uint64_t seed, unsigned workers,
                                                double tolerance, double lo, double hi) {
  if (n < 1) throw std::invalid_argument("bisection needs n >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
  if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
    throw std::invalid_argument("bisection bracket must satisfy 0 <= lo < hi <= 1");
  std::vector<BisectionResult> out;
  for (int l : ls) {
    const MeshSpec mesh(l, mode, variant);
    const int h = mode == Mode::Bond ? l - 1 : l;
    auto graph = std::make_shared<const LatticeGraph>(mesh, Window{0, l, 0, h});
    const BoxCrossing box(graph, l, h);
    std::vector<double> thresholds(n);
    for_each_chunk(n, workers, [&](std::uint64_t begin, std::uint64_t end, std::size_t) {
      for (std::uint64_t t = begin; t < end; ++t)
        thresholds[t] = box.threshold(UniformField(graph, seed, t));
    });
    std::sort(thresholds.begin(), thresholds.end());
    // fraction of replicates crossing at p: thresholds strictly below p
    auto crossing = [&](double p) {
      const auto it = std::lower_bound(thresholds.begin(), thresholds.end(), p);
      return static_cast<double>(it - thresholds.begin()) / static_cast<double>(n);
    };
    double a = lo, b = hi;
    if (!(crossing(a) < 0.5 && crossing(b) > 0.5))
      throw std::invalid_argument("bisection bracket [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "] does not straddle 1/2 at l=" +
                                  std::to_string(l));
    BisectionResult r;
    r.l = l;
    r.n = n;
    while (b - a > tolerance) {
      const double mid = 0.5 * (a + b);
      if (crossing(mid) < 0.5)
        a = mid;
      else
        b = mid;
      ++r.iterations;
    }
    r.p = 0.5 * (a + b);
    // distribution-free interval for the median from order statistics
    const double nn = static_cast<double>(n);
    const double half = kZ95 * std::sqrt(nn) / 2.0;
    const auto k_lo = static_cast<std::int64_t>(std::floor(nn / 2.0 - half));
    const auto k_hi = static_cast<std::int64_t>(std::ceil(nn / 2.0 + half));
    r.ci_low = thresholds[static_cast<std::size_t>(std::clamp<std::int64_t>(k_lo, 0, n - 1))];
    r.ci_high = thresholds[static_cast<std::size_t>(std::clamp<std::int64_t>(k_hi, 0, n - 1))];
    r.ci_low = std::min(r.ci_low, r.p);
    r.ci_high = std::max(r.ci_high, r.p);
    out.push_back(r);
  }
  return out;
}

}  // namespace perco
