#pragma once

#include "perco/configuration.hpp"
#include "perco/connectivity.hpp"
#include "perco/lattice.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace perco {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

struct Estimate {
  std::uint64_t n = 0;
  std::uint64_t successes = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t seed = 0;
  std::string descriptor;

  /// Standard error implied by the Wilson interval half-width.
  double sigma() const { return (ci_high - ci_low) / (2.0 * kZ95); }
};

std::array<double, 2> wilson_interval(std::uint64_t successes, std::uint64_t n, double z = kZ95);
Estimate make_estimate(std::uint64_t successes, std::uint64_t n, std::uint64_t seed,
                       std::string descriptor);

/// 0 means one worker per hardware thread.
unsigned resolve_workers(unsigned requested);

/// Splits [0, n) into contiguous chunks and calls body(begin, end, chunk) on
/// worker threads.  The chunking depends on n only, never on the worker
/// count, so per-chunk partial results combined in chunk order are identical
/// for any number of workers.  Returns the number of chunks.
std::size_t chunk_count(std::uint64_t n);
void for_each_chunk(std::uint64_t n, unsigned workers,
                    const std::function<void(std::uint64_t, std::uint64_t, std::size_t)>& body);

using Detector = std::function<bool(const Configuration&)>;

/// Replicate t draws sample(graph, p, seed, t).  The detector must be safe to
/// call concurrently.
Estimate estimate(const std::shared_ptr<const LatticeGraph>& graph, const Detector& event,
                  double p, std::uint64_t n, std::uint64_t seed, unsigned workers,
                  std::string descriptor);

/// Exact probabilities of several events under independent p-weights on
/// `free_variables` (all other variables closed).
std::vector<ExactRational> exact_probabilities(const std::shared_ptr<const LatticeGraph>& graph,
                                               const std::vector<int>& free_variables,
                                               const std::vector<Detector>& events,
                                               const ExactRational& p,
                                               std::size_t cap = default_enumeration_cap());
ExactRational exact_probability(const std::shared_ptr<const LatticeGraph>& graph,
                                const std::vector<int>& free_variables, const Detector& event,
                                const ExactRational& p,
                                std::size_t cap = default_enumeration_cap());

/// Decimal or fraction string ("0.5", "1/3") to an exact rational in [0, 1].
ExactRational parse_probability(const std::string& text);
double to_double(const ExactRational& r);

// ---------------------------------------------------------------------------
// Separating profile f_l(Z) on the lattice points of AB.

struct ProfilePoint {
  int z = 0;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t successes = 0;
  std::optional<ExactRational> exact;
};

class Profile {
 public:
  int l = 0;
  int steps = 0;
  bool exact = false;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::vector<ProfilePoint> points;
  /// Monte Carlo only: first_counts[k] replicates had their first
  /// separating point at k (k = steps + 1 for none).
  std::vector<std::uint64_t> first_counts;

  /// Piecewise-linear interpolation between lattice points; u is the
  /// fraction of AB measured from A.
  double at(double u) const;
};

Profile separating_profile_exact(const MeshSpec& mesh, const TriangleDomain& domain,
                                 const ExactRational& p,
                                 std::size_t cap = default_enumeration_cap());
/// Common random numbers: one configuration per replicate serves every Z.
Profile separating_profile_mc(const MeshSpec& mesh, const TriangleDomain& domain, double p,
                              std::uint64_t n, std::uint64_t seed, unsigned workers);

struct Difference {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<ExactRational> exact;
};

/// l (f(Z) - f(Z̄)) for adjacent Z̄ < Z.
Difference first_difference(const Profile& profile, int zbar, int z);
/// l^2 (f(Z) - 2 f(Z̄) + f(Ẑ)) for adjacent Ẑ < Z̄ < Z.
Difference second_difference(const Profile& profile, int zhat, int zbar, int z);

// ---------------------------------------------------------------------------

struct FitRow {
  double ratio = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t n = 0;
};

struct FitPoint {
  double ratio = 0.0;
  double value = 0.0;
  /// Standard error of log(value); zero for all points means an unweighted fit.
  double sigma_log = 0.0;
};

struct FitResult {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Weighted least squares of log P on log ratio.  Rows with equal ratio are
/// pooled; sigma_log comes from the Wilson interval.
FitResult exponent_fit(const std::vector<FitRow>& rows);
FitResult exponent_fit(const std::vector<FitPoint>& points);

// ---------------------------------------------------------------------------

struct BisectionResult {
  int l = 0;
  double p = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t n = 0;
  int iterations = 0;
};

/// Configured critical points: 1/2 for bond square and site triangular; the
/// site-square value is a literature estimate refinable with the bisection.
double default_critical(Mode mode, Variant variant);

/// Bisects p so that the left-right crossing probability of an l-box is 1/2.
/// Bond boxes have (l+1) x l vertices (self-dual), site boxes (l+1)^2 sites.
/// Each replicate contributes its exact crossing threshold, so the crossing
/// curve is a step function of p known at every p.
std::vector<BisectionResult> critical_bisection(const std::vector<int>& ls, Mode mode,
                                                Variant variant, std::uint64_t n,
                                                std::uint64_t seed, unsigned workers,
                                                double tolerance, double lo, double hi);

}  // namespace perco
