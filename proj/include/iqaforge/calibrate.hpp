#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "iqaforge/distort.hpp"
#include "iqaforge/pixels.hpp"

namespace iqaforge::calibrate {

using distort::Kind;
using pixels::ImageBuffer;

struct Level {
  int index;
  double target;
};

// Quality targets 100, 95, ..., 0 for levels 1..21. Stage 1 uses levels
// 1-11 and stage 2 uses levels 1-17.
struct LevelTable {
  std::vector<Level> levels;

  static LevelTable standard();
  const Level& at(int index) const;
};

inline constexpr int kStage1Levels = 11;
inline constexpr int kStage2Levels = 17;

struct CalibrationEntry {
  std::string ref_id;
  Kind kind;
  int level;
  double param;
  double achieved;
  bool clamped;

  friend bool operator==(const CalibrationEntry&, const CalibrationEntry&) = default;
};

// Search interval per kind, expressed as (identity, strongest). For
// jpeg_like the quality factor runs downward from 100 to 1.
struct ParamDomain {
  double identity;
  double strongest;
};
ParamDomain calibration_domain(Kind kind);

struct CalibrationOptions {
  std::uint64_t seed_root = 0;
  double tolerance = 0.25;
  int max_iterations = 40;
};

// Seed used for noise at a given level; the builder applies the same one.
std::uint64_t calibration_seed(std::string_view ref_id, Kind kind, int level,
                               std::uint64_t seed_root);

// For each level in [first_level, last_level] finds the parameter whose
// quality100 is closest to the level's target. Continuous kinds use bisection
// on the (monotone) quality curve; jpeg_like scans q = 1..100. Level 1 always
// gets the identity parameter. Targets below what the strongest parameter
// reaches are clamped to the strongest parameter and flagged.
std::vector<CalibrationEntry> calibrate_levels(const ImageBuffer& ref, std::string_view ref_id,
                                               Kind kind, const LevelTable& table,
                                               int first_level, int last_level,
                                               const CalibrationOptions& options = {});

// (quality at the strongest parameter, quality at the identity parameter).
std::pair<double, double> achievable_range(const ImageBuffer& ref, Kind kind,
                                           std::uint64_t seed = 0);

// Entries keyed by (ref_id, kind, level).
class CalibrationTable {
 public:
  CalibrationTable() = default;
  explicit CalibrationTable(std::vector<CalibrationEntry> entries);

  void add(CalibrationEntry entry);
  // Error naming (ref, kind, level) when missing.
  const CalibrationEntry& find(std::string_view ref_id, Kind kind, int level) const;
  bool contains(std::string_view ref_id, Kind kind, int level) const;
  std::vector<CalibrationEntry> entries() const;

 private:
  std::map<std::tuple<std::string, Kind, int>, CalibrationEntry> entries_;
};

// CSV: ref_id,kind,level,param,achieved,clamped
std::string format_calibration_csv(const std::vector<CalibrationEntry>& entries);
CalibrationTable read_calibration_csv(const std::filesystem::path& path);

}  // namespace iqaforge::calibrate
