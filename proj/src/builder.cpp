#include "iqaforge/builder.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/metrics.hpp"
#include "iqaforge/parallel.hpp"

namespace iqaforge::builder {

std::vector<ReferenceImage> list_references(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
  std::vector<ReferenceImage> refs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".ppm") continue;
    refs.push_back({entry.path().stem().string(), entry.path()});
  }
  std::sort(refs.begin(), refs.end(),
            [](const auto& a, const auto& b) { return a.ref_id < b.ref_id; });
  for (std::size_t i = 1; i < refs.size(); ++i) {
    if (refs[i].ref_id == refs[i - 1].ref_id) {
      throw FormatError("duplicate reference id '" + refs[i].ref_id + "'");
    }
  }
  return refs;
}

std::string make_image_id(std::string_view ref_id, int stage, const DistortionChain& chain) {
  return std::string(ref_id) + "__" + std::to_string(stage) + "__" + distort::serialize(chain);
}

const std::array<Combo, 5>& stage2_combos() {
  static const std::array<Combo, 5> combos = {{
      {"blur_jpeg", Kind::gaussian_blur, Kind::jpeg_like},
      {"blur_noise", Kind::gaussian_blur, Kind::gaussian_noise},
      {"jpeg_jpeg", Kind::jpeg_like, Kind::jpeg_like},
      {"noise_jpeg", Kind::gaussian_noise, Kind::jpeg_like},
      {"noise_jp2k", Kind::gaussian_noise, Kind::jp2k_like},
  }};
  return combos;
}

const std::array<Kind, 3>& stage1_kinds() {
  static const std::array<Kind, 3> kinds = {Kind::gaussian_noise, Kind::gaussian_blur,
                                             Kind::jpeg_like};
  return kinds;
}

std::vector<ManifestRecord> pristine_records(const std::vector<ReferenceImage>& refs) {
  std::vector<ManifestRecord> out;
  for (const auto& ref : refs) {
    ManifestRecord record;
    record.image_id = make_image_id(ref.ref_id, 0, {});
    record.ref_id = ref.ref_id;
    record.stage = 0;
    record.path = ref.path.string();
    out.push_back(std::move(record));
  }
  return out;
}

namespace {

struct LoadedReference {
  std::string ref_id;
  std::unique_ptr<metrics::QualityReference> quality;
};

std::vector<LoadedReference> load_references(const std::vector<ReferenceImage>& refs,
                                             std::size_t workers) {
  std::vector<LoadedReference> loaded(refs.size());
  parallel_for(refs.size(), workers, [&](std::size_t i) {
    loaded[i].ref_id = refs[i].ref_id;
    loaded[i].quality =
        std::make_unique<metrics::QualityReference>(pixels::load_image(refs[i].path));
  });
  return loaded;
}

distort::DistortionSpec calibrated_spec(const calibrate::CalibrationTable& calib,
                                        std::string_view ref_id, Kind kind, int level, int stage,
                                        std::uint64_t seed_root) {
  const auto& entry = calib.find(ref_id, kind, level);
  return {kind, entry.param, distort::derive_seed(ref_id, kind, level, stage, seed_root)};
}

std::string relative_image_path(const std::string& image_id) {
  return "images/" + image_id + ".png";
}

void emit_image(const ImageBuffer& img, const ManifestRecord& record, const BuildOptions& options) {
  if (!options.write_images) return;
  pixels::save_image(img, options.out_dir / record.path);
}

std::vector<ManifestRecord> flatten_sorted(std::vector<std::vector<ManifestRecord>> groups) {
  std::vector<ManifestRecord> out;
  for (auto& group : groups) {
    for (auto& record : group) out.push_back(std::move(record));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].image_id == out[i - 1].image_id) {
      throw Error("duplicate image id " + out[i].image_id);
    }
  }
  return out;
}

}  // namespace

std::vector<ManifestRecord> build_stage1(const std::vector<ReferenceImage>& refs,
                                         const calibrate::CalibrationTable& calib,
                                         const BuildOptions& options) {
  // Fail before any work if the table is incomplete.
  for (const auto& ref : refs) {
    for (Kind kind : stage1_kinds()) {
      for (int level = 1; level <= calibrate::kStage1Levels; ++level) calib.find(ref.ref_id, kind, level);
    }
  }
  const auto loaded = load_references(refs, options.workers);
  const std::size_t units = refs.size() * stage1_kinds().size();
  std::vector<std::vector<ManifestRecord>> groups(units);
  parallel_for(units, options.workers, [&](std::size_t unit) {
    const auto& ref = loaded[unit / stage1_kinds().size()];
    const Kind kind = stage1_kinds()[unit % stage1_kinds().size()];
    for (int level = 1; level <= calibrate::kStage1Levels; ++level) {
      const DistortionChain chain = {
          calibrated_spec(calib, ref.ref_id, kind, level, 1, options.seed_root)};
      const ImageBuffer img = distort::apply_chain(ref.quality->image(), chain);
      ManifestRecord record;
      record.image_id = make_image_id(ref.ref_id, 1, chain);
      record.ref_id = ref.ref_id;
      record.stage = 1;
      record.chain = chain;
      record.level1 = level;
      record.achieved1 = ref.quality->quality100(img);
      record.path = relative_image_path(record.image_id);
      emit_image(img, record, options);
      groups[unit].push_back(std::move(record));
    }
  });
  return flatten_sorted(std::move(groups));
}

std::vector<ManifestRecord> build_stage2(const std::vector<ReferenceImage>& refs,
                                         const std::vector<ManifestRecord>& stage1,
                                         const calibrate::CalibrationTable& calib,
                                         const BuildOptions& options) {
  // Parents indexed by (ref, kind, level1).
  std::map<std::tuple<std::string, Kind, int>, const ManifestRecord*> parents;
  for (const auto& record : stage1) {
    if (record.stage != 1 || record.chain.size() != 1 || !record.level1) continue;
    parents[{record.ref_id, record.chain[0].kind, *record.level1}] = &record;
  }
  struct Unit {
    std::size_t ref;
    const Combo* combo;
    const ManifestRecord* parent;
  };
  std::vector<Unit> units;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    for (const auto& combo : stage2_combos()) {
      for (int level = 1; level <= calibrate::kStage1Levels; ++level) {
        const auto it = parents.find({refs[r].ref_id, combo.first, level});
        if (it == parents.end()) {
          throw Error("missing stage-1 parent for (" + refs[r].ref_id + ", " +
                      std::string(distort::kind_name(combo.first)) + ", level " +
                      std::to_string(level) + ")");
        }
        units.push_back({r, &combo, it->second});
      }
      for (int level = 1; level <= calibrate::kStage2Levels; ++level) {
        calib.find(refs[r].ref_id, combo.second, level);
      }
    }
  }

  const auto loaded = load_references(refs, options.workers);
  std::vector<std::vector<ManifestRecord>> groups(units.size());
  parallel_for(units.size(), options.workers, [&](std::size_t u) {
    const Unit& unit = units[u];
    const auto& ref = loaded[unit.ref];
    const ImageBuffer parent = distort::apply_chain(ref.quality->image(), unit.parent->chain);
    for (int level = 1; level <= calibrate::kStage2Levels; ++level) {
      DistortionChain chain = unit.parent->chain;
      chain.push_back(
          calibrated_spec(calib, ref.ref_id, unit.combo->second, level, 2, options.seed_root));
      const ImageBuffer img = distort::apply(parent, chain.back());
      ManifestRecord record;
      record.image_id = make_image_id(ref.ref_id, 2, chain);
      record.ref_id = ref.ref_id;
      record.stage = 2;
      record.chain = std::move(chain);
      record.level1 = unit.parent->level1;
      record.level2 = level;
      record.achieved1 = unit.parent->achieved1;
      record.achieved2 = ref.quality->quality100(img);
      record.path = relative_image_path(record.image_id);
      emit_image(img, record, options);
      groups[u].push_back(std::move(record));
    }
  });
  return flatten_sorted(std::move(groups));
}

namespace {

template <typename T>
std::string optional_field(const std::optional<T>& value) {
  if (!value) return {};
  if constexpr (std::is_same_v<T, double>) {
    return format_double(*value);
  } else {
    return std::to_string(*value);
  }
}

std::optional<int> parse_optional_int(const std::string& text, std::string_view what) {
  if (text.empty()) return std::nullopt;
  return static_cast<int>(parse_int(text, what));
}

std::optional<double> parse_optional_double(const std::string& text, std::string_view what) {
  if (text.empty()) return std::nullopt;
  return parse_double(text, what);
}

}  // namespace

std::string format_manifest_csv(const std::vector<ManifestRecord>& records) {
  CsvTable table;
  table.header = {"image_id", "ref_id",    "stage",     "chain", "level1",
                  "level2",   "achieved1", "achieved2", "sqb",   "path"};
  for (const auto& r : records) {
    table.rows.push_back({r.image_id, r.ref_id, std::to_string(r.stage),
                          distort::serialize(r.chain), optional_field(r.level1),
                          optional_field(r.level2), optional_field(r.achieved1),
                          optional_field(r.achieved2), optional_field(r.sqb), r.path});
  }
  return format_csv(table);
}

std::vector<ManifestRecord> read_manifest_csv(const std::filesystem::path& path) {
  const CsvTable csv = read_csv(path);
  const std::size_t cols[] = {csv.column("image_id"),  csv.column("ref_id"),    csv.column("stage"),
                              csv.column("chain"),     csv.column("level1"),    csv.column("level2"),
                              csv.column("achieved1"), csv.column("achieved2"), csv.column("sqb"),
                              csv.column("path")};
  std::vector<ManifestRecord> out;
  for (const auto& row : csv.rows) {
    ManifestRecord r;
    r.image_id = row[cols[0]];
    r.ref_id = row[cols[1]];
    r.stage = static_cast<int>(parse_int(row[cols[2]], "stage"));
    r.chain = distort::parse_chain(row[cols[3]]);
    r.level1 = parse_optional_int(row[cols[4]], "level1");
    r.level2 = parse_optional_int(row[cols[5]], "level2");
    r.achieved1 = parse_optional_double(row[cols[6]], "achieved1");
    r.achieved2 = parse_optional_double(row[cols[7]], "achieved2");
    r.sqb = parse_optional_double(row[cols[8]], "sqb");
    r.path = row[cols[9]];
    if (r.stage < 0 || r.stage > 2 || r.chain.size() != static_cast<std::size_t>(r.stage)) {
      throw FormatError(path.string() + ": inconsistent stage/chain for " + r.image_id);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace iqaforge::builder
