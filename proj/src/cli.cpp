#include "iqaforge/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "iqaforge/builder.hpp"
#include "iqaforge/calibrate.hpp"
#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/eval.hpp"
#include "iqaforge/metrics.hpp"
#include "iqaforge/parallel.hpp"
#include "iqaforge/sqb.hpp"

namespace iqaforge::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string out;
  std::size_t workers = 0;
  bool force = false;
};

struct Options {
  Common common;
  std::string refs;
  std::string calib;
  std::string manifest;
  std::string scores;
  std::string segments;
  std::string anchor;
  std::string k = "auto";
  std::string ks;
  std::string method;
  std::string sqb;
  std::vector<std::string> lower_better;
  std::vector<std::string> metric_ids;
  std::uint64_t seed_root = 0;
  double alpha = 0.05;
  bool no_images = false;
};

std::size_t resolved_workers(const Common& c) {
  return c.workers > 0 ? c.workers : default_workers();
}

// Refuses to overwrite earlier results unless --force was given.
void guard(const fs::path& path, const Common& c) {
  if (!c.force && fs::exists(path)) {
    throw IoError(path.string() + " already exists (use --force to overwrite)");
  }
}

void write_run_json(const fs::path& out, ordered_json config) {
  write_file_atomic(out / "run.json", config.dump(2) + "\n");
}

ordered_json base_config(std::string_view command, const Options& o) {
  ordered_json j;
  j["command"] = command;
  j["out"] = o.common.out;
  j["workers"] = resolved_workers(o.common);
  return j;
}

std::vector<double> parse_k_list(const std::string& text) {
  std::vector<double> ks;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start);
    if (!piece.empty()) ks.push_back(parse_double(piece, "k"));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (ks.empty()) throw FormatError("empty k list");
  return ks;
}

double resolve_k(const std::string& text, std::size_t n) {
  if (text == "auto") return sqb::auto_k(n);
  return parse_double(text, "k");
}

void check_segment_filename(const std::string& name) {
  if (name.empty() || name.find_first_of("/\\") != std::string::npos || name == "." ||
      name == "..") {
    throw FormatError("segment name '" + name + "' cannot be used as a file name");
  }
}

int cmd_calibrate(const Options& o) {
  const fs::path out = o.common.out;
  guard(out / "calibration.csv", o.common);
  const auto refs = builder::list_references(o.refs);
  const std::array<distort::Kind, 4> kinds = {distort::Kind::gaussian_noise,
                                              distort::Kind::gaussian_blur,
                                              distort::Kind::jpeg_like, distort::Kind::jp2k_like};
  const std::size_t workers = resolved_workers(o.common);

  std::vector<pixels::ImageBuffer> images;
  images.reserve(refs.size());
  for (const auto& ref : refs) images.push_back(pixels::load_image(ref.path));

  const auto table = calibrate::LevelTable::standard();
  calibrate::CalibrationOptions copts;
  copts.seed_root = o.seed_root;
  std::vector<std::vector<calibrate::CalibrationEntry>> results(refs.size() * kinds.size());
  parallel_for(results.size(), workers, [&](std::size_t i) {
    const auto& ref = refs[i / kinds.size()];
    const auto kind = kinds[i % kinds.size()];
    // Blur never appears as a second stage, so it only needs stage-1 levels.
    const int last = kind == distort::Kind::gaussian_blur ? calibrate::kStage1Levels
                                                          : calibrate::kStage2Levels;
    results[i] = calibrate::calibrate_levels(images[i / kinds.size()], ref.ref_id, kind, table,
                                             1, last, copts);
  });
  calibrate::CalibrationTable calib;
  std::size_t clamped = 0;
  for (auto& group : results) {
    for (auto& e : group) {
      clamped += e.clamped ? 1 : 0;
      calib.add(std::move(e));
    }
  }
  const auto entries = calib.entries();
  write_file_atomic(out / "calibration.csv", calibrate::format_calibration_csv(entries));

  auto cfg = base_config("calibrate", o);
  cfg["refs"] = o.refs;
  cfg["seed_root"] = o.seed_root;
  cfg["tolerance"] = copts.tolerance;
  cfg["max_iterations"] = copts.max_iterations;
  cfg["entries"] = entries.size();
  cfg["clamped"] = clamped;
  write_run_json(out, cfg);
  return 0;
}

int cmd_build(const Options& o) {
  const fs::path out = o.common.out;
  guard(out / "manifest.csv", o.common);
  const auto refs = builder::list_references(o.refs);
  const auto calib = calibrate::read_calibration_csv(o.calib);
  builder::BuildOptions bopts;
  bopts.out_dir = out;
  bopts.workers = resolved_workers(o.common);
  bopts.seed_root = o.seed_root;
  bopts.write_images = !o.no_images;

  auto records = builder::pristine_records(refs);
  const auto stage1 = builder::build_stage1(refs, calib, bopts);
  const auto stage2 = builder::build_stage2(refs, stage1, calib, bopts);
  records.insert(records.end(), stage1.begin(), stage1.end());
  records.insert(records.end(), stage2.begin(), stage2.end());
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  write_file_atomic(out / "manifest.csv", builder::format_manifest_csv(records));

  CsvTable descriptors;
  descriptors.header = {"ref_id", "si", "cf"};
  for (const auto& ref : refs) {
    const auto img = pixels::load_image(ref.path);
    const double cf = img.channels() == 3 ? builder::colorfulness(img) : 0.0;
    descriptors.rows.push_back(
        {ref.ref_id, format_double(builder::spatial_information(img)), format_double(cf)});
  }
  write_file_atomic(out / "descriptors.csv", format_csv(descriptors));

  auto cfg = base_config("build", o);
  cfg["refs"] = o.refs;
  cfg["calib"] = o.calib;
  cfg["seed_root"] = o.seed_root;
  cfg["write_images"] = bopts.write_images;
  cfg["references"] = refs.size();
  cfg["stage1"] = stage1.size();
  cfg["stage2"] = stage2.size();
  write_run_json(out, cfg);
  return 0;
}

fs::path resolve_image_path(const fs::path& manifest_dir, const std::string& stored) {
  const fs::path p(stored);
  if (p.is_absolute() || fs::exists(p)) return p;
  return manifest_dir / p;
}

int cmd_score(const Options& o) {
  const fs::path out = o.common.out;
  guard(out / "scores.csv", o.common);
  const auto manifest = builder::read_manifest_csv(o.manifest);
  const fs::path base = fs::path(o.manifest).parent_path();

  std::vector<const metrics::FrMetricDescriptor*> chosen;
  if (o.metric_ids.empty()) {
    for (const auto& m : metrics::default_quartet()) chosen.push_back(&m);
  } else {
    for (const auto& id : o.metric_ids) chosen.push_back(&metrics::find_metric(id));
  }

  std::map<std::string, std::string> pristine;
  std::map<std::string, std::vector<const builder::ManifestRecord*>> by_ref;
  for (const auto& r : manifest) {
    if (r.stage == 0) {
      pristine[r.ref_id] = r.path;
    } else {
      by_ref[r.ref_id].push_back(&r);
    }
  }
  std::vector<std::string> ref_ids;
  for (const auto& [ref_id, group] : by_ref) {
    if (!pristine.contains(ref_id)) {
      throw FormatError("manifest has no pristine record for reference '" + ref_id + "'");
    }
    ref_ids.push_back(ref_id);
  }

  // One reference in memory per worker; distorted images are streamed.
  std::vector<std::vector<std::vector<std::string>>> rows(ref_ids.size());
  parallel_for(ref_ids.size(), resolved_workers(o.common), [&](std::size_t i) {
    const auto ref = pixels::load_image(resolve_image_path(base, pristine.at(ref_ids[i])));
    for (const auto* record : by_ref.at(ref_ids[i])) {
      const auto dist = pixels::load_image(resolve_image_path(base, record->path));
      for (const auto* m : chosen) {
        rows[i].push_back({record->image_id, m->id, format_double(m->compute(ref, dist))});
      }
    }
  });
  CsvTable table;
  table.header = {"image_id", "metric_id", "score"};
  for (auto& group : rows) {
    for (auto& row : group) table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end());
  write_file_atomic(out / "scores.csv", format_csv(table));

  auto cfg = base_config("score", o);
  cfg["manifest"] = o.manifest;
  ordered_json ids = ordered_json::array();
  for (const auto* m : chosen) {
    ids.push_back({{"id", m->id}, {"orientation", metrics::orientation_name(m->orientation)}});
  }
  cfg["metrics"] = ids;
  cfg["rows"] = table.rows.size();
  write_run_json(out, cfg);
  return 0;
}

ordered_json params_json(const sqb::LogisticParams& p) {
  return ordered_json(std::vector<double>(p.beta.begin(), p.beta.end()));
}

int cmd_sqb(const Options& o) {
  const fs::path out = o.common.out;
  guard(out / "sqb.csv", o.common);
  const auto bench = sqb::load_benchmark(o.scores, o.segments, o.lower_better);
  for (const auto& s : bench.segments) check_segment_filename(s.name);
  const double k = resolve_k(o.k, bench.scores.n);
  const auto result = sqb::generate_sqb(bench.segments, bench.scores, k, o.anchor);

  CsvTable all;
  all.header = {"image_id", "segment", "sqb"};
  for (const auto& s : bench.segments) {
    CsvTable part;
    part.header = {"image_id", "sqb"};
    for (std::size_t i = s.offset; i < s.offset + s.length; ++i) {
      part.rows.push_back({bench.image_ids[i], format_double(result.sqb[i])});
      all.rows.push_back({bench.image_ids[i], s.name, format_double(result.sqb[i])});
    }
    write_file_atomic(out / (s.name + ".csv"), format_csv(part));
  }
  write_file_atomic(out / "sqb.csv", format_csv(all));

  auto cfg = base_config("sqb", o);
  cfg["scores"] = o.scores;
  cfg["segments"] = o.segments;
  cfg["anchor"] = o.anchor;
  cfg["k_requested"] = o.k;
  cfg["k"] = k;
  cfg["n"] = bench.scores.n;
  ordered_json metric_list = ordered_json::array();
  for (const auto& c : bench.scores.columns) {
    metric_list.push_back({{"id", c.metric_id},
                           {"orientation", metrics::orientation_name(c.orientation)}});
  }
  cfg["metrics"] = metric_list;
  cfg["logistic_beta"] = params_json(result.params);
  const bool rated = std::any_of(bench.segments.begin(), bench.segments.end(),
                                 [](const auto& s) { return !s.subjective.empty(); });
  if (rated) cfg["wa_srcc"] = sqb::weighted_srcc(bench.segments, result.sqb);
  write_run_json(out, cfg);
  return 0;
}

int cmd_ksweep(const Options& o) {
  const fs::path out = o.common.out;
  guard(out / "ksweep.csv", o.common);
  const auto bench = sqb::load_benchmark(o.scores, o.segments, o.lower_better);
  const double n = static_cast<double>(bench.scores.n);
  const std::vector<double> ks =
      o.ks.empty() ? std::vector<double>{60.0, n / 10.0, n, 10.0 * n, 100.0 * n}
                   : parse_k_list(o.ks);
  const auto sweep =
      sqb::k_sweep(bench.segments, bench.scores, ks, o.anchor, resolved_workers(o.common));
  CsvTable table;
  table.header = {"k", "wa_srcc"};
  for (const auto& [k, wa] : sweep) table.rows.push_back({format_double(k), format_double(wa)});
  write_file_atomic(out / "ksweep.csv", format_csv(table));

  auto cfg = base_config("ksweep", o);
  cfg["scores"] = o.scores;
  cfg["segments"] = o.segments;
  cfg["anchor"] = o.anchor;
  cfg["ks"] = ks;
  write_run_json(out, cfg);
  return 0;
}

int cmd_eval(const Options& o) {
  const fs::path out = o.common.out;
  guard(out / "eval.csv", o.common);
  const auto bench = sqb::load_benchmark(o.scores, o.segments, o.lower_better);

  struct Cell {
    const sqb::ScoreColumn* column;
    const sqb::DatasetSegment* segment;
    const sqb::SubjectiveRatings* ratings;
    eval::EvalResult result;
    std::vector<double> residuals;
  };
  std::vector<Cell> cells;
  for (const auto& column : bench.scores.columns) {
    for (const auto& s : bench.segments) {
      for (const auto& ratings : s.subjective) cells.push_back({&column, &s, &ratings, {}, {}});
    }
  }
  if (cells.empty()) throw FormatError("no segment carries subjective scores");
  parallel_for(cells.size(), resolved_workers(o.common), [&](std::size_t i) {
    Cell& c = cells[i];
    const auto objective =
        std::span<const double>(c.column->scores).subspan(c.segment->offset, c.segment->length);
    const auto subjective = c.ratings->folded();
    c.result = eval::evaluate(objective, subjective);
    c.residuals = eval::residuals(objective, subjective);
  });

  CsvTable detail;
  detail.header = {"method", "dataset", "n", "plcc", "srcc", "kurtosis", "gaussian"};
  std::map<std::string, std::vector<const Cell*>> by_method;
  eval::ResidualTable residual_table;
  for (const auto& c : cells) {
    const double kurt = eval::kurtosis(c.residuals);
    detail.rows.push_back({c.column->metric_id, c.ratings->name, std::to_string(c.result.n),
                           format_double(c.result.plcc), format_double(c.result.srcc),
                           format_double(kurt), kurt >= 2.0 && kurt <= 4.0 ? "1" : "0"});
    by_method[c.column->metric_id].push_back(&c);
    residual_table[c.column->metric_id][c.ratings->name] = c.residuals;
  }
  std::sort(detail.rows.begin(), detail.rows.end());
  write_file_atomic(out / "eval.csv", format_csv(detail));

  CsvTable wa;
  wa.header = {"method", "wa_plcc", "wa_srcc"};
  for (const auto& [method, list] : by_method) {
    std::vector<double> p, s, w;
    for (const auto* c : list) {
      p.push_back(c->result.plcc);
      s.push_back(c->result.srcc);
      w.push_back(static_cast<double>(c->result.n));
    }
    wa.rows.push_back({method, format_double(eval::weighted_average(p, w)),
                       format_double(eval::weighted_average(s, w))});
  }
  write_file_atomic(out / "wa.csv", format_csv(wa));

  auto cfg = base_config("eval", o);
  cfg["scores"] = o.scores;
  cfg["segments"] = o.segments;
  cfg["alpha"] = o.alpha;
  if (!o.method.empty()) {
    const auto matrix =
        eval::significance_matrix(residual_table, o.method, o.alpha, resolved_workers(o.common));
    write_file_atomic(out / "significance.csv", eval::format_significance_csv(matrix));
    cfg["method"] = o.method;
    cfg["gaussian_pass_rate"] = matrix.gaussian_pass_rate;
  }
  write_run_json(out, cfg);
  return 0;
}

int cmd_summarize(const Options& o) {
  const fs::path out = o.common.out;
  guard(out / "summary.json", o.common);
  auto manifest = builder::read_manifest_csv(o.manifest);
  if (!o.sqb.empty()) {
    const CsvTable table = read_csv(o.sqb);
    const auto id_col = table.column("image_id");
    const auto sqb_col = table.column("sqb");
    std::map<std::string, double> values;
    for (const auto& row : table.rows) values[row[id_col]] = parse_double(row[sqb_col], "sqb");
    for (auto& r : manifest) {
      if (const auto it = values.find(r.image_id); it != values.end()) r.sqb = it->second;
    }
    write_file_atomic(out / "manifest_sqb.csv", builder::format_manifest_csv(manifest));
  }
  const auto summary = builder::summarize(manifest);
  write_file_atomic(out / "summary.json", builder::summary_json(summary));

  auto cfg = base_config("summarize", o);
  cfg["manifest"] = o.manifest;
  cfg["sqb"] = o.sqb;
  cfg["count"] = summary.count;
  write_run_json(out, cfg);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_option("--workers", c.workers, "Worker threads (default: IQA_FORGE_WORKERS or all cores)");
  sub->add_flag("--force", c.force, "Overwrite existing outputs");
}

void add_benchmark_inputs(CLI::App* sub, Options& o) {
  sub->add_option("--scores", o.scores, "CSV of image_id,metric_id,score")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--segments", o.segments, "Segments JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--lower-better", o.lower_better, "Metric ids whose lower scores are better")
      ->delimiter(',');
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Distorted-image dataset builder and synthetic quality benchmark tools",
               "iqa-forge"};
  app.require_subcommand(1, 1);
  Options o;

  auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit per-reference distortion parameters");
  calibrate_cmd->add_option("--refs", o.refs, "Directory of reference images")
      ->required()
      ->check(CLI::ExistingDirectory);
  calibrate_cmd->add_option("--seed-root", o.seed_root, "Root of all derived noise seeds");
  add_common(calibrate_cmd, o.common);

  auto* build_cmd = app.add_subcommand("build", "Generate stage-1 and stage-2 images");
  build_cmd->add_option("--refs", o.refs, "Directory of reference images")
      ->required()
      ->check(CLI::ExistingDirectory);
  build_cmd->add_option("--calib", o.calib, "calibration.csv")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--seed-root", o.seed_root, "Root of all derived noise seeds");
  build_cmd->add_flag("--no-images", o.no_images, "Write the manifest only");
  add_common(build_cmd, o.common);

  auto* score_cmd = app.add_subcommand("score", "Score manifest images with FR metrics");
  score_cmd->add_option("--manifest", o.manifest, "manifest.csv")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--metrics", o.metric_ids, "Metric ids (default: psnr,ssim,ms_ssim,gms_deviation)")
      ->delimiter(',');
  add_common(score_cmd, o.common);

  auto* sqb_cmd = app.add_subcommand("sqb", "Fuse metric scores into SQB values");
  add_benchmark_inputs(sqb_cmd, o);
  sqb_cmd->add_option("--anchor", o.anchor, "Segment used for the logistic fit")->required();
  sqb_cmd->add_option("--k", o.k, "RRF constant or 'auto'");
  add_common(sqb_cmd, o.common);

  auto* ksweep_cmd = app.add_subcommand("ksweep", "Weighted SRCC of SQB across RRF constants");
  add_benchmark_inputs(ksweep_cmd, o);
  ksweep_cmd->add_option("--anchor", o.anchor, "Segment used for the logistic fit")->required();
  ksweep_cmd->add_option("--ks", o.ks, "Comma-separated k values");
  add_common(ksweep_cmd, o.common);

  auto* eval_cmd = app.add_subcommand("eval", "PLCC/SRCC, weighted averages and F-tests");
  add_benchmark_inputs(eval_cmd, o);
  eval_cmd->add_option("--method", o.method, "Method compared against all others");
  eval_cmd->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(1e-6, 0.5));
  add_common(eval_cmd, o.common);

  auto* summarize_cmd = app.add_subcommand("summarize", "Histogram and boxplot statistics of SQB");
  summarize_cmd->add_option("--manifest", o.manifest, "manifest.csv")
      ->required()
      ->check(CLI::ExistingFile);
  summarize_cmd->add_option("--sqb", o.sqb, "sqb.csv to merge into the manifest")
      ->check(CLI::ExistingFile);
  add_common(summarize_cmd, o.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "calibrate") return cmd_calibrate(o);
    if (name == "build") return cmd_build(o);
    if (name == "score") return cmd_score(o);
    if (name == "sqb") return cmd_sqb(o);
    if (name == "ksweep") return cmd_ksweep(o);
    if (name == "eval") return cmd_eval(o);
    return cmd_summarize(o);
  } catch (const std::exception& e) {
    std::cerr << "iqa-forge: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("iqa-forge");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace iqaforge::cli
