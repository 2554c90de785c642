#include "iqaforge/sqb.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/eval.hpp"
#include "iqaforge/parallel.hpp"

namespace iqaforge::sqb {

SubjectiveOrientation parse_subjective_orientation(std::string_view name) {
  if (name == "mos" || name == "mos_higher_better") return SubjectiveOrientation::mos_higher_better;
  if (name == "dmos" || name == "dmos_lower_better") return SubjectiveOrientation::dmos_lower_better;
  throw FormatError("unknown subjective orientation '" + std::string(name) + "'");
}

std::vector<double> SubjectiveRatings::folded() const {
  std::vector<double> out = scores;
  if (orientation == SubjectiveOrientation::dmos_lower_better) {
    for (double& v : out) v = -v;
  }
  return out;
}

std::vector<double> rank_scores(std::span<const double> scores, Orientation orientation) {
  for (double v : scores) {
    if (std::isnan(v)) throw DomainError("rank_scores: NaN score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  if (orientation == Orientation::higher_better) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  }
  std::vector<double> ranks(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Positions i+1 .. j (1-based) share their mean.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

RankMatrix rank_matrix(const ScoreMatrix& scores) {
  RankMatrix ranks;
  for (const auto& column : scores.columns) {
    if (column.scores.size() != scores.n) {
      throw DimensionError("score column " + column.metric_id + " has wrong length");
    }
    ranks.push_back(rank_scores(column.scores, column.orientation));
  }
  return ranks;
}

std::vector<double> rrf(const RankMatrix& ranks, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("rrf: k must be > 0");
  if (ranks.empty()) throw DomainError("rrf: no rank columns");
  const std::size_t n = ranks.front().size();
  std::vector<double> out(n, 0.0);
  for (const auto& column : ranks) {
    if (column.size() != n) throw DimensionError("rrf: ragged rank matrix");
    for (std::size_t i = 0; i < n; ++i) out[i] += 1.0 / (k + column[i]);
  }
  return out;
}

std::vector<double> normalize_rrf(std::span<const double> v) {
  if (v.empty()) throw DomainError("normalize_rrf: empty vector");
  const double peak = *std::max_element(v.begin(), v.end());
  if (!(peak > 0.0)) throw DomainError("normalize_rrf: maximum must be positive");
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [peak](double x) { return x / peak; });
  return out;
}

std::vector<double> rescale_0_100(std::span<const double> q) {
  if (q.empty()) throw DomainError("rescale_0_100: empty vector");
  const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
  const double low = *lo;
  const double span = *hi - low;
  if (!(span > 0.0)) throw DomainError("rescale_0_100: degenerate range");
  std::vector<double> out(q.size());
  std::transform(q.begin(), q.end(), out.begin(),
                 [&](double x) { return (x - low) / span * 100.0; });
  return out;
}

void check_tiling(std::span<const DatasetSegment> segments, std::size_t n) {
  std::vector<const DatasetSegment*> sorted;
  for (const auto& s : segments) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->offset < b->offset; });
  std::size_t next = 0;
  std::set<std::string_view> names;
  for (const auto* s : sorted) {
    if (!names.insert(s->name).second) throw FormatError("duplicate segment '" + s->name + "'");
    if (s->offset != next || s->length == 0) {
      throw FormatError("segments do not tile the score vector at segment '" + s->name + "'");
    }
    for (const auto& ratings : s->subjective) {
      if (ratings.scores.size() != s->length) {
        throw FormatError("segment '" + s->name + "' subjective length mismatch");
      }
    }
    next += s->length;
  }
  if (next != n) throw FormatError("segments cover " + std::to_string(next) + " of " +
                                   std::to_string(n) + " rows");
}

const DatasetSegment& find_segment(std::span<const DatasetSegment> segments,
                                   std::string_view name) {
  for (const auto& s : segments) {
    if (s.name == name) return s;
  }
  throw FormatError("no segment named '" + std::string(name) + "'");
}

SqbResult generate_sqb(std::span<const DatasetSegment> segments, const ScoreMatrix& scores,
                       double k, std::string_view anchor) {
  check_tiling(segments, scores.n);
  const DatasetSegment& anchor_segment = find_segment(segments, anchor);
  if (anchor_segment.subjective.empty()) {
    throw FormatError("anchor segment '" + std::string(anchor) + "' has no subjective scores");
  }

  SqbResult result;
  result.rrf_normalized = normalize_rrf(rrf(rank_matrix(scores), k));
  const auto anchor_r =
      std::span<const double>(result.rrf_normalized).subspan(anchor_segment.offset,
                                                             anchor_segment.length);
  const auto anchor_s = anchor_segment.subjective.front().folded();
  result.params = fit_logistic(anchor_r, anchor_s);
  result.sqb = rescale_0_100(apply_logistic(result.params, result.rrf_normalized));
  return result;
}

double weighted_srcc(std::span<const DatasetSegment> segments, std::span<const double> sqb) {
  std::vector<double> values;
  std::vector<double> weights;
  for (const auto& s : segments) {
    for (const auto& ratings : s.subjective) {
      values.push_back(eval::srcc(sqb.subspan(s.offset, s.length), ratings.folded()));
      weights.push_back(static_cast<double>(s.length));
    }
  }
  if (values.empty()) throw FormatError("no segment carries subjective scores");
  return eval::weighted_average(values, weights);
}

std::vector<std::pair<double, double>> k_sweep(std::span<const DatasetSegment> segments,
                                               const ScoreMatrix& scores,
                                               std::span<const double> ks,
                                               std::string_view anchor, std::size_t workers) {
  std::vector<std::pair<double, double>> out(ks.size());
  parallel_for(ks.size(), workers, [&](std::size_t i) {
    const SqbResult result = generate_sqb(segments, scores, ks[i], anchor);
    out[i] = {ks[i], weighted_srcc(segments, result.sqb)};
  });
  return out;
}

double auto_k(std::size_t n) { return n >= 1'000'000 ? 8e6 : 2.0 * static_cast<double>(n); }

namespace {

std::vector<double> json_numbers(const nlohmann::json& j, std::string_view what) {
  if (!j.is_array()) throw FormatError(std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError(std::string(what) + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

Benchmark assemble_benchmark(std::string_view scores_csv_text, std::string_view segments_json_text,
                             std::span<const std::string> lower_better) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(segments_json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("segments JSON: ") + e.what());
  }
  const nlohmann::json& list = root.is_object() && root.contains("segments") ? root["segments"] : root;
  if (!list.is_array()) throw FormatError("segments JSON must be an array of segments");

  Benchmark bench;
  std::map<std::string, std::size_t> row_of;
  for (const auto& js : list) {
    DatasetSegment segment;
    segment.name = js.at("name").get<std::string>();
    segment.offset = bench.image_ids.size();
    for (const auto& id : js.at("image_ids")) {
      const auto image_id = id.get<std::string>();
      if (!row_of.emplace(image_id, bench.image_ids.size()).second) {
        throw FormatError("image '" + image_id + "' appears in more than one segment");
      }
      bench.image_ids.push_back(image_id);
    }
    segment.length = bench.image_ids.size() - segment.offset;
    if (js.contains("subjective")) {
      SubjectiveRatings ratings;
      ratings.name = segment.name;
      ratings.scores = json_numbers(js["subjective"], "subjective");
      ratings.orientation =
          parse_subjective_orientation(js.value("orientation", std::string("mos")));
      segment.subjective.push_back(std::move(ratings));
    }
    if (js.contains("subjective_sets")) {
      for (const auto& set : js["subjective_sets"]) {
        SubjectiveRatings ratings;
        ratings.name =
            set.value("name", segment.name + "#" + std::to_string(segment.subjective.size()));
        ratings.scores = json_numbers(set.at("scores"), "subjective_sets.scores");
        ratings.orientation =
            parse_subjective_orientation(set.value("orientation", std::string("mos")));
        segment.subjective.push_back(std::move(ratings));
      }
    }
    bench.segments.push_back(std::move(segment));
  }

  const CsvTable csv = parse_csv(scores_csv_text, "scores");
  const auto image_col = csv.column("image_id");
  const auto metric_col = csv.column("metric_id");
  const auto score_col = csv.column("score");
  std::map<std::string, std::vector<double>> by_metric;
  std::map<std::string, std::vector<bool>> seen;
  const std::size_t n = bench.image_ids.size();
  for (const auto& row : csv.rows) {
    const auto it = row_of.find(row[image_col]);
    if (it == row_of.end()) continue;
    auto& column = by_metric[row[metric_col]];
    auto& flags = seen[row[metric_col]];
    if (column.empty()) {
      column.assign(n, 0.0);
      flags.assign(n, false);
    }
    if (flags[it->second]) {
      throw FormatError("duplicate score for " + row[image_col] + "/" + row[metric_col]);
    }
    flags[it->second] = true;
    column[it->second] = parse_double(row[score_col], "score");
  }
  bench.scores.n = n;
  for (auto& [metric_id, column] : by_metric) {
    const auto& flags = seen[metric_id];
    for (std::size_t i = 0; i < n; ++i) {
      if (!flags[i]) {
        throw FormatError("missing " + metric_id + " score for image " + bench.image_ids[i]);
      }
    }
    Orientation orientation = Orientation::higher_better;
    if (std::find(lower_better.begin(), lower_better.end(), metric_id) != lower_better.end()) {
      orientation = Orientation::lower_better;
    } else {
      try {
        orientation = metrics::find_metric(metric_id).orientation;
      } catch (const FormatError&) {
        // unregistered metrics default to higher_better
      }
    }
    bench.scores.columns.push_back({metric_id, orientation, std::move(column)});
  }
  check_tiling(bench.segments, n);
  return bench;
}

Benchmark load_benchmark(const std::filesystem::path& scores_csv,
                         const std::filesystem::path& segments_json,
                         std::span<const std::string> lower_better) {
  return assemble_benchmark(read_text_file(scores_csv), read_text_file(segments_json),
                            lower_better);
}

}  // namespace iqaforge::sqb
