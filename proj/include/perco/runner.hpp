#pragma once

#include "perco/configuration.hpp"
#include "perco/lattice.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace perco {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum class Experiment { Crossing, Profile, Arms, SixArm, Conformal, Oracle, Bisect };
enum class OutputFormat { Csv, Json };

std::string to_string(Experiment e);
/// Accepts the subcommand names and the long forms (crossing-scan, arm-scan,
/// six-arm, bisection).
Experiment parse_experiment(const std::string& s);
std::string to_string(OutputFormat f);
OutputFormat parse_format(const std::string& s);

/// Thrown for malformed configs; the message names the key and line.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ArmRequest {
  std::string geometry = "whole";
  int open_arms = 0;
  int closed_arms = 0;
};

/// Every field has a default suited to the experiment, see defaults_for().
struct ExperimentConfig {
  Experiment experiment = Experiment::Crossing;
  Mode mode = Mode::Bond;
  Variant variant = Variant::Square;
  std::vector<int> ls;
  /// Split points as exact fractions of AB.
  std::vector<Rational> xs;
  /// Probabilities as written; parsed exactly for the oracle.
  std::vector<std::string> ps;
  std::uint64_t n = 0;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string out;
  OutputFormat format = OutputFormat::Csv;

  bool exact = false;             // profile
  std::vector<int> r_list;        // arms, sixarm
  std::vector<int> R_list;
  std::vector<ArmRequest> arms;
  double c = 0.5;                 // sixarm
  double tolerance = 1e-12;       // conformal quadrature, bisection width
  std::vector<double> measured;   // conformal
  double lo = 0.0, hi = 1.0;      // bisection bracket

  /// Key/value lines that reproduce the run; workers, out and format are
  /// left out because they must not change the result.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

ExperimentConfig defaults_for(Experiment e);

/// key = value lines; '#' starts a comment.  Keys not given keep the
/// defaults of the experiment named by the `experiment` key (or `fallback`).
ExperimentConfig parse_config(const std::string& text,
                              std::optional<Experiment> fallback = std::nullopt);
ExperimentConfig load_config(const std::string& path,
                             std::optional<Experiment> fallback = std::nullopt);
/// Applies one key = value pair; line is used in diagnostics only.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      int line = 0);

/// Fixed leading columns of every record.
const std::vector<std::string>& base_columns();

/// One output row: the base columns followed by the experiment's extra
/// columns, already formatted.  Empty strings are missing values.
struct ResultRow {
  std::vector<std::string> cells;
};

struct ResultRecord {
  Experiment experiment = Experiment::Crossing;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> notes;
  std::vector<std::string> columns;
  std::vector<ResultRow> rows;
};

ResultRecord run_experiment(const ExperimentConfig& cfg);

std::string render(const ResultRecord& record, OutputFormat format);
/// Parses a rendered record back; throws on anything malformed.
ResultRecord parse_record(const std::string& text);

/// Runs the config and writes the record to cfg.out (stdout when empty).
/// Returns the rendered text.
std::string run(const ExperimentConfig& cfg);

struct VerifyReport {
  bool pass = false;
  std::string message;
};

/// Re-runs the config embedded in a record and compares the re-rendered
/// text with the stored bytes.
VerifyReport verify_text(const std::string& text, unsigned workers = 0);
VerifyReport verify(const std::string& path, unsigned workers = 0);

}  // namespace perco
