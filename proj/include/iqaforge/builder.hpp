#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iqaforge/calibrate.hpp"
#include "iqaforge/distort.hpp"
#include "iqaforge/pixels.hpp"

namespace iqaforge::builder {

using distort::DistortionChain;
using distort::Kind;
using pixels::ImageBuffer;

struct ReferenceImage {
  std::string ref_id;
  std::filesystem::path path;
};

// PNG/PPM files directly inside `dir`, id = file stem, sorted by id.
std::vector<ReferenceImage> list_references(const std::filesystem::path& dir);

// One generated (or pristine) image and how it was made.
struct ManifestRecord {
  std::string image_id;
  std::string ref_id;
  int stage = 0;
  DistortionChain chain;
  std::optional<int> level1;
  std::optional<int> level2;
  std::optional<double> achieved1;
  std::optional<double> achieved2;
  std::optional<double> sqb;
  std::string path;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

// `{ref_id}__{stage}__{chain}`
std::string make_image_id(std::string_view ref_id, int stage, const DistortionChain& chain);

struct Combo {
  std::string_view name;
  Kind first;
  Kind second;
};

// Blur-JPEG, Blur-Noise, JPEG-JPEG, Noise-JPEG, Noise-JP2K.
const std::array<Combo, 5>& stage2_combos();
// Noise, blur, JPEG.
const std::array<Kind, 3>& stage1_kinds();

struct BuildOptions {
  // Images land in out_dir/images; manifest paths are relative to out_dir.
  std::filesystem::path out_dir;
  std::size_t workers = 1;
  std::uint64_t seed_root = 0;
  bool write_images = true;
};

std::vector<ManifestRecord> pristine_records(const std::vector<ReferenceImage>& refs);

// n_refs x 3 kinds x 11 levels, sorted by image_id.
std::vector<ManifestRecord> build_stage1(const std::vector<ReferenceImage>& refs,
                                         const calibrate::CalibrationTable& calib,
                                         const BuildOptions& options);

// n_refs x 11 x 17 per combo. The second stage reuses the reference's own
// calibrated parameter for that level; the parent is regenerated from its
// chain rather than read back from disk.
std::vector<ManifestRecord> build_stage2(const std::vector<ReferenceImage>& refs,
                                         const std::vector<ManifestRecord>& stage1,
                                         const calibrate::CalibrationTable& calib,
                                         const BuildOptions& options);

std::string format_manifest_csv(const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> read_manifest_csv(const std::filesystem::path& path);

// Mean Sobel gradient magnitude of the luma plane (replicated borders).
double spatial_information(const ImageBuffer& img);
// sqrt(var_rg + var_yb) + 0.3 sqrt(mean_rg^2 + mean_yb^2), rg = R - G,
// yb = (R + G)/2 - B. Requires three channels.
double colorfulness(const ImageBuffer& img);

struct ContentDescriptors {
  double si;
  double cf;
};

struct DistributionSummary {
  std::size_t count = 0;
  // Bin b holds values in [b, b+1); 100 lands in bin 100.
  std::array<std::size_t, 101> histogram{};
  // Bin d holds [10d, 10d+10), the last bin also takes 100.
  std::array<std::size_t, 10> deciles{};
  double min = 0;
  double max = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double whisker_low = 0;
  double whisker_high = 0;
  std::size_t outliers_low = 0;
  std::size_t outliers_high = 0;
};

DistributionSummary summarize(std::vector<double> sqb);
DistributionSummary summarize(const std::vector<ManifestRecord>& manifest);
std::string summary_json(const DistributionSummary& summary);

}  // namespace iqaforge::builder
