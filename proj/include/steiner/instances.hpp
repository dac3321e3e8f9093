#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "steiner/graph.hpp"

namespace steiner {

enum class Distribution { Uniform01, Normal };

std::string_view to_string(Distribution d);
/// Accepts "uniform" and "normal".
Distribution parse_distribution(std::string_view s);

inline constexpr double kNormalMean = 0.5;
inline constexpr double kNormalSd = 0.2;

struct GeneratorSpec {
  std::size_t n = 10;
  Distribution dist = Distribution::Uniform01;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

/// `count` instances; instance i draws from its own sub-seed of spec.seed,
/// so a prefix of a larger dataset equals the smaller one.
std::vector<PointSet> generate(const GeneratorSpec& spec, std::size_t count);

/// Line 1 holds n, then n lines of "x y" with 17 significant digits.
std::string format_instance(const PointSet& s);
void save_instance(const PointSet& s, const std::filesystem::path& path);

/// Accepts LF or CRLF and trailing blank lines. Throws ParseError naming the
/// offending 1-based line for a bad count, a malformed or non-finite
/// coordinate, too few point lines, or extra content.
PointSet parse_instance(std::string_view text, const std::string& source = "<input>");
PointSet load_instance(const std::filesystem::path& path);

inline constexpr int kDatasetFormatVersion = 1;

struct Dataset {
  std::optional<GeneratorSpec> spec;  // empty for hand-made datasets
  std::vector<std::string> files;     // relative to the manifest directory
  std::vector<PointSet> instances;
};

/// Writes `dir`/manifest.json and one instance file per entry.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
/// Accepts a dataset directory, its manifest, or a single instance file.
Dataset load_dataset(const std::filesystem::path& path);

struct GapReport {
  std::string solver;
  std::string reference;
  std::vector<double> gaps;  // fractions, one per evaluated instance
  double mean = 0.0;
  double sd = 0.0;           // sample standard deviation
  std::size_t count = 0;
  std::size_t excluded = 0;  // instances whose reference failed
  double seconds_per_instance = 0.0;  // wall clock; kept out of JSON
};

using LengthFn = std::function<double(const PointSet&)>;

/// gap_i = (len_i - ref_i) / ref_i over instances whose reference succeeds.
/// `reference_lengths`, when given, supplies cached reference values
/// (NaN marks a failed reference).
GapReport evaluate(const std::string& solver_name, const LengthFn& solver, const std::string& reference_name,
                   const LengthFn& reference, const std::vector<PointSet>& instances);
GapReport evaluate_against(const std::string& solver_name, const LengthFn& solver,
                           const std::string& reference_name, const std::vector<double>& reference_lengths,
                           const std::vector<PointSet>& instances);

/// "mean ± sd%" with two decimals.
std::string format_gap(const GapReport& r);

inline constexpr int kReportFormatVersion = 1;

/// Deterministic JSON (no timing).
std::string reports_to_json(const std::vector<GapReport>& reports);
/// Aligned text table including the per-instance timing column.
std::string reports_to_table(const std::vector<GapReport>& reports);

}  // namespace steiner
