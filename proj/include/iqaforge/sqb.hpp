#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iqaforge/metrics.hpp"

namespace iqaforge::sqb {

using metrics::Orientation;

enum class SubjectiveOrientation { mos_higher_better, dmos_lower_better };

SubjectiveOrientation parse_subjective_orientation(std::string_view name);

struct SubjectiveRatings {
  std::string name;
  std::vector<double> scores;
  SubjectiveOrientation orientation = SubjectiveOrientation::mos_higher_better;

  // Scores with DMOS negated, so larger always means better.
  std::vector<double> folded() const;
};

// A named contiguous span of the concatenated score vector. Datasets rated
// under several conditions (viewing distances, ...) list one ratings entry per
// condition; each counts separately in weighted averages.
struct DatasetSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
  std::vector<SubjectiveRatings> subjective;
};

struct ScoreColumn {
  std::string metric_id;
  Orientation orientation;
  std::vector<double> scores;
};

// n images x J metrics, stored by column.
struct ScoreMatrix {
  std::size_t n = 0;
  std::vector<ScoreColumn> columns;
};

// Fractional ranks, one column per metric; rank 1 is the best image.
using RankMatrix = std::vector<std::vector<double>>;

// Five-parameter modified logistic:
//   S(R) = b1 (1/2 - 1/(1 + exp(b2 (R - b3)))) + b4 R + b5
struct LogisticParams {
  std::array<double, 5> beta{};

  double operator()(double r) const;
};

// Rank 1 = best after orientation folding; ties share the mean of the
// positions they cover. NaN is rejected.
std::vector<double> rank_scores(std::span<const double> scores, Orientation orientation);
RankMatrix rank_matrix(const ScoreMatrix& scores);

// sum_j 1 / (k + r_j(i)).
std::vector<double> rrf(const RankMatrix& ranks, double k);
// v / max(v).
std::vector<double> normalize_rrf(std::span<const double> v);

// Least-squares fit of the logistic by Nelder-Mead simplex descent,
// restarted from five deterministic starting points; best restart wins.
LogisticParams fit_logistic(std::span<const double> r, std::span<const double> s);
std::vector<double> apply_logistic(const LogisticParams& params, std::span<const double> r);
double logistic_sse(const LogisticParams& params, std::span<const double> r,
                    std::span<const double> s);

// 100 (Q - min Q) / max(Q - min Q).
std::vector<double> rescale_0_100(std::span<const double> q);

struct SqbResult {
  std::vector<double> rrf_normalized;
  std::vector<double> sqb;
  LogisticParams params;

  std::span<const double> segment(const DatasetSegment& s) const {
    return std::span(sqb).subspan(s.offset, s.length);
  }
};

// Segments must tile [0, n) exactly.
void check_tiling(std::span<const DatasetSegment> segments, std::size_t n);
const DatasetSegment& find_segment(std::span<const DatasetSegment> segments, std::string_view name);

// Rank every metric over the whole concatenation, fuse with RRF, normalize,
// fit the logistic on the anchor rows against the anchor's (folded)
// subjective scores, map every row and rescale to 0-100.
SqbResult generate_sqb(std::span<const DatasetSegment> segments, const ScoreMatrix& scores,
                       double k, std::string_view anchor);

// Length-weighted mean SRCC between SQB and every subjective rating set.
double weighted_srcc(std::span<const DatasetSegment> segments, std::span<const double> sqb);

std::vector<std::pair<double, double>> k_sweep(std::span<const DatasetSegment> segments,
                                               const ScoreMatrix& scores,
                                               std::span<const double> ks,
                                               std::string_view anchor, std::size_t workers = 1);

// 2n below a million rows, 8e6 at corpus scale.
double auto_k(std::size_t n);

// Segments declared in JSON together with the concatenated score matrix.
struct Benchmark {
  std::vector<DatasetSegment> segments;
  std::vector<std::string> image_ids;
  ScoreMatrix scores;
};

// Reads `image_id,metric_id,score` rows and a segments JSON array of
// {name, image_ids, subjective?, orientation?, subjective_sets?}. Rows are
// concatenated in declaration order. Metric orientation comes from the
// built-in registry unless the id is listed in `lower_better`.
Benchmark load_benchmark(const std::filesystem::path& scores_csv,
                         const std::filesystem::path& segments_json,
                         std::span<const std::string> lower_better = {});
Benchmark assemble_benchmark(std::string_view scores_csv_text, std::string_view segments_json_text,
                             std::span<const std::string> lower_better = {});

}  // namespace iqaforge::sqb
