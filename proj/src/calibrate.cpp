#include "iqaforge/calibrate.hpp"

#include <cmath>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/metrics.hpp"

namespace iqaforge::calibrate {

LevelTable LevelTable::standard() {
  LevelTable table;
  for (int i = 1; i <= 21; ++i) table.levels.push_back({i, 100.0 - 5.0 * (i - 1)});
  return table;
}

const Level& LevelTable::at(int index) const {
  for (const auto& level : levels) {
    if (level.index == index) return level;
  }
  throw DomainError("level " + std::to_string(index) + " not in table");
}

ParamDomain calibration_domain(Kind kind) {
  switch (kind) {
    case Kind::gaussian_noise: return {0.0, 0.5};
    case Kind::gaussian_blur: return {0.0, 16.0};
    case Kind::jp2k_like: return {0.0, 2.0};
    case Kind::jpeg_like: return {100.0, 1.0};
  }
  throw DomainError("unsupported kind");
}

std::uint64_t calibration_seed(std::string_view ref_id, Kind kind, int level,
                               std::uint64_t seed_root) {
  return distort::derive_seed(ref_id, kind, level, 1, seed_root);
}

namespace {

struct Probe {
  double param;
  double score;
};

// Closer to target wins; on a tie the milder distortion wins.
bool better(const Probe& a, const Probe& b, double target, Kind kind) {
  const double da = std::abs(a.score - target);
  const double db = std::abs(b.score - target);
  if (da != db) return da < db;
  return kind == Kind::jpeg_like ? a.param > b.param : a.param < b.param;
}

CalibrationEntry bisect(const metrics::QualityReference& ref, std::string_view ref_id, Kind kind,
                        const Level& level, const CalibrationOptions& options) {
  const auto domain = calibration_domain(kind);
  const auto seed = calibration_seed(ref_id, kind, level.index, options.seed_root);
  auto evaluate = [&](double p) {
    return Probe{p, ref.quality100(distort::apply(ref.image(), {kind, p, seed}))};
  };
  const double target = level.target;

  Probe strongest = evaluate(domain.strongest);
  if (strongest.score >= target) {
    return {std::string(ref_id), kind,          level.index, strongest.param, strongest.score,
            strongest.score - target > options.tolerance};
  }

  double lo = domain.identity;
  double hi = domain.strongest;
  Probe best = strongest;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Probe mid = evaluate(0.5 * (lo + hi));
    if (better(mid, best, target, kind)) best = mid;
    if (std::abs(mid.score - target) <= options.tolerance) break;
    (mid.score > target ? lo : hi) = mid.param;
  }
  return {std::string(ref_id), kind, level.index, best.param, best.score, false};
}

// Integer q steps can move the score by several points at low quality, so
// the nearest integer is refined by bisection over real q inside the
// neighbouring interval that brackets the target.
Probe refine_between_integers(const metrics::QualityReference& ref, const std::vector<Probe>& grid,
                              std::size_t best_at, double target,
                              const CalibrationOptions& options) {
  Probe best = grid[best_at];
  auto brackets = [&](std::size_t i) {
    return i + 1 < grid.size() && (grid[i].score - target) * (grid[i + 1].score - target) <= 0.0;
  };
  std::size_t pair = grid.size();
  if (brackets(best_at)) {
    pair = best_at;
  } else if (best_at > 0 && brackets(best_at - 1)) {
    pair = best_at - 1;
  }
  if (pair == grid.size()) return best;

  // grid runs from q = 100 downward, so grid[pair] is the milder end.
  Probe mild = grid[pair];
  Probe strong = grid[pair + 1];
  for (int it = 0; it < options.max_iterations; ++it) {
    const double q = 0.5 * (mild.param + strong.param);
    const Probe mid{q, ref.quality100(distort::jpeg_like(ref.image(), q))};
    if (better(mid, best, target, Kind::jpeg_like)) best = mid;
    if (std::abs(mid.score - target) <= options.tolerance) break;
    (mid.score > target ? mild : strong) = mid;
  }
  return best;
}

std::vector<CalibrationEntry> jpeg_grid(const metrics::QualityReference& ref,
                                        std::string_view ref_id, const LevelTable& table,
                                        int first_level, int last_level,
                                        const CalibrationOptions& options) {
  std::vector<Probe> grid;
  for (int q = 100; q >= 1; --q) {
    grid.push_back({static_cast<double>(q),
                    ref.quality100(distort::jpeg_like(ref.image(), static_cast<double>(q)))});
  }
  double floor_score = grid.front().score;
  for (const auto& probe : grid) floor_score = std::min(floor_score, probe.score);

  std::vector<CalibrationEntry> out;
  for (int index = first_level; index <= last_level; ++index) {
    const Level& level = table.at(index);
    if (index == 1) {
      out.push_back({std::string(ref_id), Kind::jpeg_like, 1, 100.0, grid.front().score, false});
      continue;
    }
    std::size_t best_at = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (better(grid[i], grid[best_at], level.target, Kind::jpeg_like)) best_at = i;
    }
    Probe best = grid[best_at];
    if (std::abs(best.score - level.target) > options.tolerance) {
      best = refine_between_integers(ref, grid, best_at, level.target, options);
    }
    const bool clamped = floor_score - level.target > options.tolerance;
    out.push_back({std::string(ref_id), Kind::jpeg_like, index, best.param, best.score, clamped});
  }
  return out;
}

}  // namespace

std::vector<CalibrationEntry> calibrate_levels(const ImageBuffer& ref, std::string_view ref_id,
                                               Kind kind, const LevelTable& table,
                                               int first_level, int last_level,
                                               const CalibrationOptions& options) {
  if (first_level < 1 || last_level < first_level) throw DomainError("invalid level range");
  table.at(first_level);
  table.at(last_level);
  const metrics::QualityReference qref(ref);
  if (kind == Kind::jpeg_like) {
    return jpeg_grid(qref, ref_id, table, first_level, last_level, options);
  }
  std::vector<CalibrationEntry> out;
  for (int index = first_level; index <= last_level; ++index) {
    if (index == 1) {
      out.push_back({std::string(ref_id), kind, 1, distort::identity_param(kind), 100.0, false});
      continue;
    }
    out.push_back(bisect(qref, ref_id, kind, table.at(index), options));
  }
  return out;
}

std::pair<double, double> achievable_range(const ImageBuffer& ref, Kind kind, std::uint64_t seed) {
  const auto domain = calibration_domain(kind);
  const metrics::QualityReference qref(ref);
  const double weakest = qref.quality100(distort::apply(ref, {kind, domain.identity, seed}));
  const double strongest = qref.quality100(distort::apply(ref, {kind, domain.strongest, seed}));
  return {strongest, weakest};
}

CalibrationTable::CalibrationTable(std::vector<CalibrationEntry> entries) {
  for (auto& e : entries) add(std::move(e));
}

void CalibrationTable::add(CalibrationEntry entry) {
  auto key = std::make_tuple(entry.ref_id, entry.kind, entry.level);
  entries_.insert_or_assign(std::move(key), std::move(entry));
}

const CalibrationEntry& CalibrationTable::find(std::string_view ref_id, Kind kind,
                                               int level) const {
  const auto it = entries_.find(std::make_tuple(std::string(ref_id), kind, level));
  if (it == entries_.end()) {
    throw Error("missing calibration entry for (" + std::string(ref_id) + ", " +
                std::string(distort::kind_name(kind)) + ", level " + std::to_string(level) + ")");
  }
  return it->second;
}

bool CalibrationTable::contains(std::string_view ref_id, Kind kind, int level) const {
  return entries_.contains(std::make_tuple(std::string(ref_id), kind, level));
}

std::vector<CalibrationEntry> CalibrationTable::entries() const {
  std::vector<CalibrationEntry> out;
  for (const auto& [key, entry] : entries_) out.push_back(entry);
  return out;
}

std::string format_calibration_csv(const std::vector<CalibrationEntry>& entries) {
  CsvTable table;
  table.header = {"ref_id", "kind", "level", "param", "achieved", "clamped"};
  for (const auto& e : entries) {
    table.rows.push_back({e.ref_id, std::string(distort::kind_name(e.kind)),
                          std::to_string(e.level), format_double(e.param),
                          format_double(e.achieved), e.clamped ? "1" : "0"});
  }
  return format_csv(table);
}

CalibrationTable read_calibration_csv(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  const auto ref = csv.column("ref_id");
  const auto kind = csv.column("kind");
  const auto level = csv.column("level");
  const auto param = csv.column("param");
  const auto achieved = csv.column("achieved");
  const auto clamped = csv.column("clamped");
  CalibrationTable table;
  for (const auto& row : csv.rows) {
    table.add({row[ref], distort::parse_kind(row[kind]),
               static_cast<int>(parse_int(row[level], "level")), parse_double(row[param], "param"),
               parse_double(row[achieved], "achieved"), row[clamped] == "1"});
  }
  return table;
}

}  // namespace iqaforge::calibrate
