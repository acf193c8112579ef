#include "tacsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "tacsim/align.hpp"
#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"
#include "tacsim/rng.hpp"
#include "tacsim/sensor_oracle.hpp"
#include "tacsim/vis.hpp"

namespace tacsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Manifest kinds for stage outputs that share the taxel-trace CSV format
// but must not be confused with the raw sensor trace.
constexpr const char* kKindWarpedTaxels = "warped_taxels";
constexpr const char* kKindPredictedTaxels = "predicted_taxels";

// Classification trials share one press-slide-release action; pose and
// slide variation come from the per-trial sampler. The lateral slide drags
// the contact set across the mesh lattice, so the force and contact-
// centroid tracks carry the indenter's cross-section geometry.
constexpr double kClassifyPressSpeed = 0.008;  // m/s
constexpr double kClassifySlideTime = 0.7;     // s at full depth
constexpr double kClassifySlideMaxX = 0.007;   // m, drag distance in +x
constexpr double kClassifySlideMaxY = 0.001;   // m, transverse wobble
constexpr double kClassifyFrameRate = 25.0;    // Hz

std::string trials_dir(const PipelineConfig& config) {
  return config.out_dir + "/trials";
}

std::vector<std::string> trial_ids(const PipelineConfig& config) {
  if (!fs::exists(trials_dir(config) + "/manifest.json"))
    throw MissingArtifact(kKindSimRecording);
  return read_batch_ids(trials_dir(config));
}

NodeSets config_nodes(const PipelineConfig& config, const TetMesh& mesh) {
  return classify_nodes(mesh, config_taxels(config), config.cluster_radius);
}

StressClusters config_clusters(const PipelineConfig& config,
                               const TetMesh& mesh) {
  return build_stress_clusters(mesh, config_taxels(config),
                               config.cluster_radius, config.top_fraction);
}

/// Digest-verified model lookup by manifest id. The out_dir manifest can
/// hold several models, so kind-level lookup is not enough.
std::string require_model_path(const std::string& out_dir,
                               const std::string& id) {
  const std::string manifest_path = out_dir + "/manifest.json";
  if (!fs::exists(manifest_path)) throw MissingArtifact(kKindModel);
  const Manifest manifest = load_manifest(manifest_path);
  verify_manifest(manifest, out_dir);
  const ManifestEntry* entry = manifest.find_id(id);
  if (entry == nullptr || entry->kind != kKindModel)
    throw MissingArtifact(kKindModel);
  return out_dir + "/" + entry->path;
}

TaxelTrace read_trace_kind(const std::string& dir, const char* kind) {
  const ManifestEntry entry = require_artifact(dir, kind);
  return read_taxel_trace_csv(dir + "/" + entry.path);
}

void write_trace_kind(const std::string& dir, const std::string& id,
                      const char* kind, const std::string& file_name,
                      const TaxelTrace& trace, std::uint64_t seed,
                      const std::string& note) {
  write_taxel_trace_csv(dir + "/" + file_name, trace);
  ManifestEntry entry;
  entry.id = id;
  entry.kind = kind;
  entry.path = file_name;
  entry.seed = seed;
  entry.note = note;
  register_artifact(dir, entry);
}

void register_report(const std::string& out_dir, const std::string& id,
                     const std::string& rel_path, std::uint64_t seed,
                     const std::string& note) {
  ManifestEntry entry;
  entry.id = id;
  entry.kind = kKindReport;
  entry.path = rel_path;
  entry.seed = seed;
  entry.note = note;
  register_artifact(out_dir, entry);
}

void write_report_json(const PipelineConfig& config, const std::string& id,
                       const std::string& rel_path, const json& doc,
                       std::uint64_t seed, const std::string& note) {
  const std::string path = config.out_dir + "/" + rel_path;
  fs::create_directories(fs::path(path).parent_path());
  write_text_file(path, doc.dump(2) + "\n");
  register_report(config.out_dir, id, rel_path, seed, note);
}

json train_report_json(const TrainReport& report) {
  json doc;
  doc["epochs"] = report.train_loss.size();
  doc["best_epoch"] = report.best_epoch;
  doc["best_val_loss"] = report.best_val_loss;
  doc["final_train_loss"] =
      report.train_loss.empty() ? 0.0 : report.train_loss.back();
  doc["final_val_loss"] =
      report.val_loss.empty() ? 0.0 : report.val_loss.back();
  doc["lr_reductions"] = report.lr_reductions;
  doc["train_count"] = report.train_count;
  doc["val_count"] = report.val_count;
  doc["seed"] = report.seed;
  doc["dataset_digest"] = report.dataset_digest;
  return doc;
}

Eigen::MatrixXd trace_to_matrix(const TaxelTrace& trace) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(trace.samples.size()), 8);
  for (std::size_t k = 0; k < trace.samples.size(); ++k)
    for (std::size_t i = 0; i < 8; ++i)
      m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
          trace.samples[k][i];
  return m;
}

std::string classify_trial_rel_path(const std::string& arm,
                                    const std::string& label,
                                    int trial_index) {
  char name[32];
  std::snprintf(name, sizeof(name), "trial_%03d.csv", trial_index);
  return arm + "/" + label + "/" + name;
}

struct ClassifyContext {
  TetMesh mesh;
  NodeSets nodes;
  StressClusters clusters;
};

ClassifyContext make_classify_context(const PipelineConfig& config) {
  ClassifyContext ctx;
  ctx.mesh = config_mesh(config);
  ctx.nodes = config_nodes(config, ctx.mesh);
  ctx.clusters = config_clusters(config, ctx.mesh);
  return ctx;
}

/// One classification trial at a sampled pose. Draw order from the trial
/// rng: offset_x, offset_y, depth, yaw, slide_dx, slide_dy; the caller then
/// draws the sensor-channel noise seed from the same rng.
SimRecording run_classify_trial(const PipelineConfig& config,
                                const ClassifyContext& ctx,
                                std::size_t class_index, Rng& rng) {
  Indenter indenter = config.indenters[class_index];
  indenter.offset_x =
      0.5 * config.mesh_lx + rng.uniform(-config.pose_max_offset,
                                         config.pose_max_offset);
  indenter.offset_y =
      0.5 * config.mesh_ly + rng.uniform(-config.pose_max_offset,
                                         config.pose_max_offset);
  const double depth =
      rng.uniform(config.pose_min_depth, config.pose_max_depth);
  indenter.yaw += rng.uniform(-config.pose_max_yaw, config.pose_max_yaw);
  // The capture protocol always drags in +x for a near-fixed distance; only
  // a small length jitter and a transverse wobble are randomized.
  const double slide_dx =
      kClassifySlideMaxX * (0.9 + 0.1 * std::abs(rng.uniform(-1.0, 1.0)));
  const double slide_dy =
      rng.uniform(-kClassifySlideMaxY, kClassifySlideMaxY);

  // Press to depth, slide laterally at full depth, release in place.
  const double t_press = depth / kClassifyPressSpeed;
  const double total = 2.0 * t_press + kClassifySlideTime;
  Trajectory trajectory;
  trajectory.frame_rate = kClassifyFrameRate;
  const auto frames =
      static_cast<std::size_t>(std::lround(total * kClassifyFrameRate)) + 1;
  trajectory.samples.resize(frames);
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) / kClassifyFrameRate;
    TrajectorySample& s = trajectory.samples[k];
    s.time = t;
    if (t < t_press) {
      s.depth = kClassifyPressSpeed * t;
      s.offset_x = 0.0;
      s.offset_y = 0.0;
    } else if (t < t_press + kClassifySlideTime) {
      const double u = (t - t_press) / kClassifySlideTime;
      s.depth = depth;
      s.offset_x = slide_dx * u;
      s.offset_y = slide_dy * u;
    } else {
      s.depth = std::max(0.0, depth - kClassifyPressSpeed *
                                          (t - t_press - kClassifySlideTime));
      s.offset_x = slide_dx;
      s.offset_y = slide_dy;
    }
  }
  return run_scenario(ctx.mesh, ctx.nodes, config.material, indenter,
                      trajectory, config.solver);
}

/// Generates one labeled arm ("real"/"test" through the sensor emulator,
/// "sim" through the trained regressor), writes the trace CSVs and upserts
/// them into classify/manifest.json. Returns the sequences.
std::vector<LabeledSequence> generate_classify_arm(
    const PipelineConfig& config, const ClassifyContext& ctx,
    const std::string& arm, int trials_per_class,
    const MlpParams* regressor) {
  const std::string classify_dir = config.out_dir + "/classify";
  const std::string domain = "classify." + arm;
  const std::vector<Vec3> taxels = config_taxels(config);

  Manifest manifest;
  if (fs::exists(classify_dir + "/manifest.json"))
    manifest = load_manifest(classify_dir + "/manifest.json");

  std::vector<LabeledSequence> sequences;
  sequences.reserve(config.indenters.size() *
                    static_cast<std::size_t>(trials_per_class));
  for (std::size_t c = 0; c < config.indenters.size(); ++c) {
    const std::string& label = config.classifier.labels[c];
    fs::create_directories(classify_dir + "/" + arm + "/" + label);
    for (int k = 0; k < trials_per_class; ++k) {
      const std::uint64_t seed = derive_seed(
          config.seed, domain.c_str(),
          c * static_cast<std::size_t>(trials_per_class) +
              static_cast<std::size_t>(k));
      Rng rng(seed);
      const SimRecording rec = run_classify_trial(config, ctx, c, rng);

      TaxelTrace trace;
      if (regressor == nullptr) {
        OracleParams oracle = config.oracle;
        oracle.seed = rng.next_u64();
        trace = emulate(rec, taxels, oracle).first;
      } else {
        std::vector<std::array<double, 8>> features(rec.frame_count());
        for (std::size_t f = 0; f < rec.frame_count(); ++f)
          features[f] = aggregate_stress(rec.frames[f], ctx.clusters,
                                         config.epsilon_floor)
                            .values;
        trace = predict_taxel_trace(*regressor, features, rec.frame_rate);
        // Model output lives on the simulation frame grid; push it through
        // the sensor channel so generated trials share the captured trials'
        // timeline, lag, noise floor and quantization grid.
        trace = apply_sensor_channel(rec.times, trace, config.oracle,
                                     rng.next_u64());
      }

      const std::string rel_path = classify_trial_rel_path(arm, label, k);
      write_taxel_trace_csv(classify_dir + "/" + rel_path, trace);
      ManifestEntry entry;
      entry.id = rel_path.substr(0, rel_path.size() - 4);  // drop ".csv"
      entry.kind = kKindTaxelTrace;
      entry.path = rel_path;
      entry.digest = digest_hex(digest_file(classify_dir + "/" + rel_path));
      entry.seed = seed;
      entry.note = label;
      manifest.upsert(std::move(entry));

      LabeledSequence seq;
      seq.sequence = trace_to_matrix(trace);
      seq.label = c;
      sequences.push_back(std::move(seq));
    }
  }
  save_manifest(manifest, classify_dir + "/manifest.json");
  return sequences;
}

json eval_result_json(const EvalResult& result,
                      const std::vector<std::string>& labels) {
  json doc;
  doc["accuracy"] = result.accuracy;
  doc["labels"] = labels;
  doc["confusion"] = result.confusion;
  doc["per_class_accuracy"] = result.per_class_accuracy;
  return doc;
}

}  // namespace

TetMesh config_mesh(const PipelineConfig& config) {
  return generate_box_mesh(config.mesh_lx, config.mesh_ly, config.mesh_lz,
                           config.mesh_nx, config.mesh_ny, config.mesh_nz);
}

std::vector<Vec3> config_taxels(const PipelineConfig& config) {
  return make_taxel_grid(config.mesh_lx, config.mesh_ly, config.mesh_lz,
                         config.taxel_rows, config.taxel_cols,
                         config.taxel_pitch);
}

TetMesh stage_mesh_gen(const PipelineConfig& config) {
  TetMesh mesh = config_mesh(config);
  fs::create_directories(config.out_dir);
  save_tetmesh(mesh, config.out_dir + "/mesh.txt");
  return mesh;
}

BatchOutcome stage_simulate(const PipelineConfig& config) {
  const TetMesh mesh = config_mesh(config);
  const NodeSets nodes = config_nodes(config, mesh);
  BatchConfig batch;
  batch.indenters = config.indenters;
  batch.locations = config.locations;
  batch.trajectories = config.trajectories;
  return batch_generate(mesh, nodes, config.material, batch, config.solver,
                        trials_dir(config), config.seed);
}

void stage_oracle(const PipelineConfig& config) {
  const std::vector<std::string> ids = trial_ids(config);
  const std::vector<Vec3> taxels = config_taxels(config);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::string dir = trials_dir(config) + "/" + ids[i];
    const SimRecording rec = read_recording(dir);
    OracleParams params = config.oracle;
    params.seed = derive_seed(config.seed, "oracle", i);
    auto [taxel_trace, force_trace] = emulate(rec, taxels, params);
    write_taxel_trace(dir, taxel_trace, params.seed, ids[i]);
    write_force_trace(dir, force_trace, params.seed, ids[i]);
  }
}

void stage_align(const PipelineConfig& config) {
  for (const std::string& id : trial_ids(config)) {
    const std::string dir = trials_dir(config) + "/" + id;
    const TaxelTrace taxels = read_taxel_trace(dir);
    const ForceTrace force_real = read_force_trace(dir);
    const SimRecording rec = read_recording(dir);

    const WarpPath path =
        dtw(normalize_for_dtw(rec.force_trace, config.align_normalize),
            normalize_for_dtw(force_real.samples, config.align_normalize));
    TaxelTrace warped;
    warped.samples =
        warp_taxels(taxels.samples, path, rec.frame_count(),
                    config.align_reduce);
    warped.rate_hz = rec.frame_rate;

    write_trace_kind(dir, "warped", kKindWarpedTaxels, "warped.csv", warped,
                     0, id);
    write_warp_path_csv(path, dir + "/warp_path.csv");
    write_alignment_report(path, dir + "/alignment.json");
    ManifestEntry entry;
    entry.id = "alignment";
    entry.kind = kKindReport;
    entry.path = "alignment.json";
    entry.note = id;
    register_artifact(dir, entry);
  }
}

void stage_features(const PipelineConfig& config) {
  const TetMesh mesh = config_mesh(config);
  const StressClusters clusters = config_clusters(config, mesh);
  for (const std::string& id : trial_ids(config)) {
    const std::string dir = trials_dir(config) + "/" + id;
    const TaxelTrace warped = read_trace_kind(dir, kKindWarpedTaxels);
    const SimRecording rec = read_recording(dir);
    const PairSet pairs =
        build_pairs(rec, warped.samples, clusters,
                    config.oracle.baselines_kpa, config.epsilon_floor);
    write_pairs(dir, pairs, 0, id);
  }
}

std::vector<std::string> eval_trial_ids(const PipelineConfig& config,
                                        const std::vector<std::string>& ids) {
  SplitSpec spec;
  spec.seed = derive_seed(config.seed, "trial_split");
  spec.train_fraction = 1.0 - config.eval_fraction;
  spec.val_fraction = 0.0;
  spec.test_fraction = config.eval_fraction;
  spec.granularity = SplitGranularity::kTrial;
  const SplitResult split = split_indices(ids.size(), spec);
  std::vector<std::string> held_out;
  held_out.reserve(split.test.size());
  for (std::size_t index : split.test) held_out.push_back(ids[index]);
  std::sort(held_out.begin(), held_out.end());
  return held_out;
}

TrainReport stage_train(const PipelineConfig& config) {
  const std::vector<std::string> ids = trial_ids(config);
  const std::vector<std::string> held_out = eval_trial_ids(config, ids);
  const std::set<std::string> held(held_out.begin(), held_out.end());

  PairSet all;
  for (const std::string& id : ids) {
    if (held.count(id) > 0) continue;
    const PairSet pairs = read_pairs(trials_dir(config) + "/" + id);
    all.times.insert(all.times.end(), pairs.times.begin(), pairs.times.end());
    all.inputs.insert(all.inputs.end(), pairs.inputs.begin(),
                      pairs.inputs.end());
    all.targets.insert(all.targets.end(), pairs.targets.begin(),
                       pairs.targets.end());
  }
  if (all.size() == 0)
    throw ConfigError("no training pairs; run the features stage first");

  TrainConfig train = config.train;
  train.seed = derive_seed(config.seed, "train");
  auto [params, report] =
      train_taxel_model(all, config.oracle.baselines_kpa, config.hidden,
                        train);

  fs::create_directories(config.out_dir + "/models");
  save_mlp(params, config.out_dir + "/models/taxel_mlp.json");
  ManifestEntry entry;
  entry.id = "taxel_mlp";
  entry.kind = kKindModel;
  entry.path = "models/taxel_mlp.json";
  entry.seed = train.seed;
  entry.note = "dataset " + report.dataset_digest;
  register_artifact(config.out_dir, entry);

  json doc = train_report_json(report);
  doc["train_trials"] = static_cast<std::size_t>(ids.size() - held.size());
  doc["eval_trials"] = held_out;
  write_report_json(config, "train_report", "reports/train.json", doc,
                    train.seed, "regressor training");
  return report;
}

void stage_predict(const PipelineConfig& config) {
  const MlpParams model =
      load_mlp(require_model_path(config.out_dir, "taxel_mlp"));
  for (const std::string& id : trial_ids(config)) {
    const std::string dir = trials_dir(config) + "/" + id;
    const PairSet pairs = read_pairs(dir);
    const SimRecording rec = read_recording(dir);
    const TaxelTrace predicted =
        predict_taxel_trace(model, pairs.inputs, rec.frame_rate);
    write_trace_kind(dir, "predicted", kKindPredictedTaxels, "predicted.csv",
                     predicted, 0, id);
  }
}

EvalSummary stage_eval(const PipelineConfig& config) {
  const std::vector<std::string> held_out =
      eval_trial_ids(config, trial_ids(config));

  EvalSummary summary;
  double abs_error_sum = 0.0;
  std::size_t value_count = 0;
  for (const std::string& id : held_out) {
    const std::string dir = trials_dir(config) + "/" + id;
    const TaxelTrace warped = read_trace_kind(dir, kKindWarpedTaxels);
    const TaxelTrace predicted = read_trace_kind(dir, kKindPredictedTaxels);
    if (warped.samples.size() != predicted.samples.size())
      throw CorruptionError("prediction and oracle lengths differ in " + id);
    for (std::size_t k = 0; k < warped.samples.size(); ++k)
      for (std::size_t i = 0; i < 8; ++i) {
        abs_error_sum +=
            std::abs(predicted.samples[k][i] - warped.samples[k][i]);
        summary.max_gauge_kpa =
            std::max(summary.max_gauge_kpa,
                     warped.samples[k][i] - config.oracle.baselines_kpa[i]);
        ++value_count;
      }
    summary.frame_count += warped.samples.size();
  }
  summary.trial_count = held_out.size();
  if (value_count == 0)
    throw ConfigError("evaluation set is empty; check the eval fraction");
  if (!(summary.max_gauge_kpa > 0.0))
    throw ConfigError("held-out trials show no contact pressure");
  summary.mean_abs_error_kpa =
      abs_error_sum / static_cast<double>(value_count);
  summary.fidelity_pct =
      100.0 * summary.mean_abs_error_kpa / summary.max_gauge_kpa;

  json doc;
  doc["fidelity_pct"] = summary.fidelity_pct;
  doc["mean_abs_error_kpa"] = summary.mean_abs_error_kpa;
  doc["max_gauge_kpa"] = summary.max_gauge_kpa;
  doc["trial_count"] = summary.trial_count;
  doc["frame_count"] = summary.frame_count;
  doc["trials"] = held_out;
  write_report_json(config, "eval_report", "reports/eval.json", doc, 0,
                    "held-out fidelity");
  return summary;
}

void stage_render(const PipelineConfig& config) {
  const std::vector<std::string> held_out =
      eval_trial_ids(config, trial_ids(config));
  if (held_out.empty())
    throw ConfigError("no held-out trial to render; check the eval fraction");
  const std::string id = held_out.front();
  const std::string dir = trials_dir(config) + "/" + id;

  const SimRecording rec = read_recording(dir);
  const TaxelTrace warped = read_trace_kind(dir, kKindWarpedTaxels);
  const TaxelTrace predicted = read_trace_kind(dir, kKindPredictedTaxels);
  if (rec.frame_count() == 0 || warped.samples.empty() ||
      predicted.samples.size() != warped.samples.size())
    throw CorruptionError("render inputs are inconsistent in " + id);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < rec.force_trace.size(); ++k)
    if (rec.force_trace[k] > rec.force_trace[peak]) peak = k;
  peak = std::min(peak, warped.samples.size() - 1);

  const GridSpec grid = cover_surface(config.mesh_lx, config.mesh_ly,
                                      config.render_width,
                                      config.render_height);
  RbfOptions options;
  options.shape_sigma = config.rbf_sigma;
  options.mode = config.rbf_exact ? RbfMode::kExact : RbfMode::kDirect;
  options.negated_sign = config.rbf_negated_sign;
  const std::vector<Vec3> taxels = config_taxels(config);

  const PressureGrid oracle_grid =
      rbf_pressure_map(warped.samples[peak], config.oracle.baselines_kpa,
                       taxels, grid, options);
  const PressureGrid predicted_grid =
      rbf_pressure_map(predicted.samples[peak], config.oracle.baselines_kpa,
                       taxels, grid, options);

  double lo = 0.0, hi = 0.0;
  for (double v : oracle_grid.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : predicted_grid.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;

  const std::string renders = config.out_dir + "/renders";
  fs::create_directories(renders);
  export_pgm(oracle_grid, renders + "/oracle.pgm", lo, hi);
  export_grid_csv(oracle_grid, renders + "/oracle.csv");
  export_pgm(predicted_grid, renders + "/predicted.pgm", lo, hi);
  export_grid_csv(predicted_grid, renders + "/predicted.csv");

  json doc;
  doc["trial"] = id;
  doc["frame"] = peak;
  doc["range_min_kpa"] = lo;
  doc["range_max_kpa"] = hi;
  write_report_json(config, "render_report", "reports/render.json", doc, 0,
                    "pressure map render");
}

EvalSummary stage_pipeline(const PipelineConfig& config) {
  stage_mesh_gen(config);
  stage_simulate(config);
  stage_oracle(config);
  stage_align(config);
  stage_features(config);
  stage_train(config);
  stage_predict(config);
  const EvalSummary summary = stage_eval(config);
  stage_render(config);
  return summary;
}

void stage_classify_train(const PipelineConfig& config) {
  const MlpParams regressor =
      load_mlp(require_model_path(config.out_dir, "taxel_mlp"));
  const ClassifyContext ctx = make_classify_context(config);

  const std::vector<LabeledSequence> real_data = generate_classify_arm(
      config, ctx, "real", config.real_trials_per_class, nullptr);
  const std::vector<LabeledSequence> sim_data = generate_classify_arm(
      config, ctx, "sim", config.sim_trials_per_class, &regressor);

  TrainConfig real_train = config.classifier_train;
  real_train.seed = derive_seed(config.seed, "classifier.real");
  auto [real_params, real_report] =
      train_classifier(real_data, config.classifier, real_train);

  std::vector<LabeledSequence> hybrid_data = real_data;
  hybrid_data.insert(hybrid_data.end(), sim_data.begin(), sim_data.end());
  TrainConfig hybrid_train = config.classifier_train;
  hybrid_train.seed = derive_seed(config.seed, "classifier.hybrid");
  auto [hybrid_params, hybrid_report] =
      train_classifier(hybrid_data, config.classifier, hybrid_train);

  fs::create_directories(config.out_dir + "/models");
  save_classifier(real_params, config.out_dir + "/models/classifier_real.json");
  save_classifier(hybrid_params,
                  config.out_dir + "/models/classifier_hybrid.json");
  for (const char* id : {"classifier_real", "classifier_hybrid"}) {
    ManifestEntry entry;
    entry.id = id;
    entry.kind = kKindModel;
    entry.path = std::string("models/") + id + ".json";
    entry.seed = std::string(id) == "classifier_real" ? real_train.seed
                                                      : hybrid_train.seed;
    register_artifact(config.out_dir, entry);
  }

  json doc;
  doc["real_only"] = train_report_json(real_report);
  doc["hybrid"] = train_report_json(hybrid_report);
  doc["real_sequences"] = real_data.size();
  doc["sim_sequences"] = sim_data.size();
  write_report_json(config, "classify_train_report",
                    "reports/classify_train.json", doc, config.seed,
                    "classifier training");
}

ClassifySummary stage_classify_eval(const PipelineConfig& config) {
  const ClassifierParams real_params = load_classifier(
      require_model_path(config.out_dir, "classifier_real"));
  const ClassifierParams hybrid_params = load_classifier(
      require_model_path(config.out_dir, "classifier_hybrid"));
  const ClassifyContext ctx = make_classify_context(config);

  const std::vector<LabeledSequence> test_data = generate_classify_arm(
      config, ctx, "test", config.test_trials_per_class, nullptr);

  ClassifySummary summary;
  summary.labels = config.classifier.labels;
  summary.real_only = evaluate_classifier(real_params, test_data);
  summary.hybrid = evaluate_classifier(hybrid_params, test_data);

  json doc;
  doc["labels"] = summary.labels;
  doc["test_sequences"] = test_data.size();
  doc["real_only"] = eval_result_json(summary.real_only, summary.labels);
  doc["hybrid"] = eval_result_json(summary.hybrid, summary.labels);
  write_report_json(config, "classify_report", "reports/classify.json", doc,
                    config.seed, "classifier evaluation");
  return summary;
}

}  // namespace tacsim
