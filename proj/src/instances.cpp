#include "steiner/instances.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "steiner/errors.hpp"
#include "steiner/random.hpp"

namespace steiner {

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::Uniform01: return "uniform";
    case Distribution::Normal: return "normal";
  }
  return "?";
}

Distribution parse_distribution(std::string_view s) {
  if (s == "uniform") return Distribution::Uniform01;
  if (s == "normal") return Distribution::Normal;
  throw std::invalid_argument("unknown distribution '" + std::string(s) + "'");
}

void GeneratorSpec::validate() const {
  if (n < 2) throw std::invalid_argument("instances need at least 2 points");
}

std::vector<PointSet> generate(const GeneratorSpec& spec, std::size_t count) {
  spec.validate();
  std::vector<PointSet> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed({spec.seed, i}));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(kNormalMean, kNormalSd);
    std::vector<Point> pts(spec.n);
    for (Point& p : pts) {
      if (spec.dist == Distribution::Uniform01) {
        p.x = unif(rng);
        p.y = unif(rng);
      } else {
        p.x = normal(rng);
        p.y = normal(rng);
      }
    }
    out.emplace_back(std::move(pts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instance files

std::string format_instance(const PointSet& s) {
  std::string out = std::to_string(s.size()) + "\n";
  char buf[64];
  for (const Point& p : s.points) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p.x, p.y);
    out += buf;
  }
  return out;
}

void save_instance(const PointSet& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write instance " + path.string());
  out << format_instance(s);
  if (!out) throw std::runtime_error("failed writing instance " + path.string());
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_coordinate(std::string_view tok, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(source, line, "'" + std::string(tok) + "' is not a number");
  if (!std::isfinite(v)) throw ParseError(source, line, "coordinate '" + std::string(tok) + "' is not finite");
  return v;
}

}  // namespace

PointSet parse_instance(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() || tokens(lines[0]).empty()) throw ParseError(source, 1, "expected the point count");
  const auto head = tokens(lines[0]);
  if (head.size() != 1) throw ParseError(source, 1, "expected a single point count");
  std::size_t n = 0;
  {
    const auto [ptr, ec] = std::from_chars(head[0].data(), head[0].data() + head[0].size(), n);
    if (ec != std::errc() || ptr != head[0].data() + head[0].size() || n == 0)
      throw ParseError(source, 1, "'" + std::string(head[0]) + "' is not a positive point count");
  }

  std::vector<Point> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lineno = i + 2;
    if (i + 1 >= lines.size())
      throw ParseError(source, lineno, "expected " + std::to_string(n) + " points, found " + std::to_string(i));
    const auto tok = tokens(lines[i + 1]);
    if (tok.empty())
      throw ParseError(source, lineno, "expected " + std::to_string(n) + " points, found " + std::to_string(i));
    if (tok.size() != 2) throw ParseError(source, lineno, "expected two coordinates \"x y\"");
    pts.push_back({parse_coordinate(tok[0], source, lineno), parse_coordinate(tok[1], source, lineno)});
  }
  for (std::size_t i = n + 1; i < lines.size(); ++i)
    if (!tokens(lines[i]).empty()) throw ParseError(source, i + 1, "unexpected content after the last point");
  return PointSet(std::move(pts));
}

PointSet load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open instance " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Datasets

void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());

  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < data.instances.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "instance_%05zu.txt", i);
    const std::string file = i < data.files.size() ? data.files[i] : name;
    save_instance(data.instances[i], dir / file);
    files.push_back(file);
  }
  nlohmann::json manifest = {{"format_version", kDatasetFormatVersion},
                             {"count", data.instances.size()},
                             {"files", files}};
  if (data.spec) {
    manifest["spec"] = {{"n", data.spec->n},
                        {"dist", std::string(to_string(data.spec->dist))},
                        {"seed", data.spec->seed}};
  }
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw InputError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw InputError("no such file or directory: " + path.string());

  std::filesystem::path manifest_path;
  if (std::filesystem::is_directory(path, ec)) {
    manifest_path = path / "manifest.json";
    if (!std::filesystem::exists(manifest_path, ec))
      throw InputError("dataset directory " + path.string() + " has no manifest.json");
  } else if (path.extension() == ".json") {
    manifest_path = path;
  } else {
    Dataset single;
    single.files.push_back(path.filename().string());
    single.instances.push_back(load_instance(path));
    return single;
  }

  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest " + manifest_path.string());
  Dataset data;
  try {
    const nlohmann::json doc = nlohmann::json::parse(in);
    const int version = doc.at("format_version").get<int>();
    if (version != kDatasetFormatVersion)
      throw InputError("manifest format_version " + std::to_string(version) + " is not supported");
    if (doc.contains("spec")) {
      const auto& s = doc.at("spec");
      GeneratorSpec spec;
      spec.n = s.at("n").get<std::size_t>();
      spec.dist = parse_distribution(s.at("dist").get<std::string>());
      spec.seed = s.at("seed").get<std::uint64_t>();
      data.spec = spec;
    }
    data.files = doc.at("files").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed manifest " + manifest_path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  const auto dir = manifest_path.parent_path();
  for (const std::string& f : data.files) data.instances.push_back(load_instance(dir / f));
  return data;
}

// ---------------------------------------------------------------------------
// Gap evaluation

namespace {

void summarize(GapReport& r) {
  r.count = r.gaps.size();
  if (r.count == 0) return;
  r.mean = std::accumulate(r.gaps.begin(), r.gaps.end(), 0.0) / static_cast<double>(r.count);
  if (r.count > 1) {
    double ss = 0.0;
    for (double g : r.gaps) ss += (g - r.mean) * (g - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(r.count - 1));
  }
}

}  // namespace

GapReport evaluate_against(const std::string& solver_name, const LengthFn& solver,
                           const std::string& reference_name, const std::vector<double>& reference_lengths,
                           const std::vector<PointSet>& instances) {
  if (reference_lengths.size() != instances.size())
    throw std::invalid_argument("evaluate: one reference length per instance required");
  GapReport r{solver_name, reference_name, {}, 0.0, 0.0, 0, 0, 0.0};
  double seconds = 0.0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const double ref = reference_lengths[i];
    if (!std::isfinite(ref) || ref <= 0.0) {
      ++r.excluded;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    const double len = solver(instances[i]);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.gaps.push_back((len - ref) / ref);
  }
  summarize(r);
  if (r.count > 0) r.seconds_per_instance = seconds / static_cast<double>(r.count);
  return r;
}

GapReport evaluate(const std::string& solver_name, const LengthFn& solver, const std::string& reference_name,
                   const LengthFn& reference, const std::vector<PointSet>& instances) {
  std::vector<double> refs;
  refs.reserve(instances.size());
  for (const PointSet& s : instances) {
    try {
      refs.push_back(reference(s));
    } catch (const std::exception&) {
      refs.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return evaluate_against(solver_name, solver, reference_name, refs, instances);
}

std::string format_gap(const GapReport& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f%%", 100.0 * r.mean, 100.0 * r.sd);
  return buf;
}

std::string reports_to_json(const std::vector<GapReport>& reports) {
  nlohmann::json rows = nlohmann::json::array();
  for (const GapReport& r : reports) {
    rows.push_back({{"solver", r.solver},
                    {"reference", r.reference},
                    {"count", r.count},
                    {"excluded", r.excluded},
                    {"mean_gap", r.mean},
                    {"sd_gap", r.sd},
                    {"summary", format_gap(r)},
                    {"gaps", r.gaps}});
  }
  nlohmann::json doc = {{"format_version", kReportFormatVersion}, {"reports", rows}};
  return doc.dump(2) + "\n";
}

std::string reports_to_table(const std::vector<GapReport>& reports) {
  std::size_t w_solver = 6, w_ref = 9;
  for (const GapReport& r : reports) {
    w_solver = std::max(w_solver, r.solver.size());
    w_ref = std::max(w_ref, r.reference.size());
  }
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-*s  %8s  %8s  %18s  %12s\n", static_cast<int>(w_solver), "solver",
                static_cast<int>(w_ref), "reference", "count", "excluded", "gap", "ms/instance");
  out += buf;
  for (const GapReport& r : reports) {
    // "±" is two bytes but one column; pad by hand.
    const std::string gap = format_gap(r);
    const std::size_t visible = gap.size() - 1;
    const std::string padded = std::string(visible < 18 ? 18 - visible : 0, ' ') + gap;
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %8zu  %8zu  %s  %12.3f\n", static_cast<int>(w_solver),
                  r.solver.c_str(), static_cast<int>(w_ref), r.reference.c_str(), r.count, r.excluded,
                  padded.c_str(), 1000.0 * r.seconds_per_instance);
    out += buf;
  }
  return out;
}

}  // namespace steiner
