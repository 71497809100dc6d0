#pragma once

#include "perco/lattice.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace perco {

using ExactRational = boost::multiprecision::cpp_rational;

/// One open/closed assignment of every site (site mode) or bond (bond mode)
/// of a window.  states[k] is 1 for open.
class Configuration {
 public:
  Configuration(std::shared_ptr<const LatticeGraph> graph, double p = 0.0,
                std::uint64_t seed = 0, std::uint64_t replicate = 0);

  const LatticeGraph& graph() const { return *graph_; }
  const std::shared_ptr<const LatticeGraph>& graph_ptr() const { return graph_; }

  std::size_t size() const { return states_.size(); }
  bool open(std::size_t k) const { return states_[k] != 0; }
  void set(std::size_t k, bool open) { states_[k] = open ? 1 : 0; }
  void fill(bool open);
  const std::vector<std::uint8_t>& states() const { return states_; }
  std::size_t open_count() const;

  double p() const { return p_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t replicate() const { return replicate_; }
  void set_provenance(double p, std::uint64_t seed, std::uint64_t replicate) {
    p_ = p;
    seed_ = seed;
    replicate_ = replicate;
  }

  bool operator==(const Configuration& o) const { return states_ == o.states_; }

 private:
  std::shared_ptr<const LatticeGraph> graph_;
  std::vector<std::uint8_t> states_;
  double p_;
  std::uint64_t seed_;
  std::uint64_t replicate_;
};

/// One uniform(0,1) value per variable, a pure function of
/// (seed, replicate, index).  Thresholding one field at increasing p gives
/// nested open sets.
class UniformField {
 public:
  UniformField(std::shared_ptr<const LatticeGraph> graph, std::uint64_t seed,
               std::uint64_t replicate);

  const std::shared_ptr<const LatticeGraph>& graph_ptr() const { return graph_; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const { return values_.size(); }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t replicate() const { return replicate_; }

 private:
  std::shared_ptr<const LatticeGraph> graph_;
  std::vector<double> values_;
  std::uint64_t seed_, replicate_;
};

void check_probability(double p);

/// Each variable open independently with probability p.
Configuration sample(std::shared_ptr<const LatticeGraph> graph, double p, std::uint64_t seed,
                     std::uint64_t replicate);
/// Same as sample() but reusing the storage of `out`.
void sample_into(Configuration& out, double p, std::uint64_t seed, std::uint64_t replicate);

/// state(k) = open iff field[k] < p.
Configuration threshold(const UniformField& field, double p);

/// Translate states by (di, dj) lattice steps inside the same window; sites
/// or bonds moved in from outside are closed.
Configuration translate(const Configuration& c, int di, int dj);

// ---------------------------------------------------------------------------

std::size_t default_enumeration_cap();

/// All 2^n assignments of a set of free variables; every other variable is
/// closed.  Assignments are visited in Gray-code order, one flip per step.
class Enumeration {
 public:
  Enumeration(std::shared_ptr<const LatticeGraph> graph, std::vector<int> free_variables,
              std::size_t cap = default_enumeration_cap());

  std::size_t free_count() const { return free_.size(); }
  std::uint64_t count() const { return std::uint64_t{1} << free_.size(); }
  const std::vector<int>& free_variables() const { return free_; }

  /// Calls fn(config, open_count) once for each assignment.
  void for_each(const std::function<void(const Configuration&, int)>& fn) const;

  /// p^k (1-p)^(n-k) for k = 0..n.
  std::vector<ExactRational> weights(const ExactRational& p) const;

 private:
  std::shared_ptr<const LatticeGraph> graph_;
  std::vector<int> free_;
};

/// Sum of weights over assignments counted by open variables:
/// sum_k counts[k] p^k (1-p)^(n-k).
ExactRational weighted_sum(const std::vector<std::uint64_t>& counts_by_open,
                           const ExactRational& p);

// ---------------------------------------------------------------------------
// Binary dump: "PRCF", u32 version, u8 mode, u8 variant, u32 l, i32 window
// (i_min, i_max, j_min, j_max), u64 seed, u64 replicate, f64 p, u64 count,
// then ceil(count/8) bytes of packed states, bit k%8 of byte k/8.  All
// integers little-endian.

void write_dump(std::ostream& os, const Configuration& c);
Configuration read_dump(std::istream& is);

}  // namespace perco
