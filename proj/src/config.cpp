#include "tacsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "tacsim/dataset.hpp"
#include "tacsim/errors.hpp"

namespace tacsim {

using nlohmann::json;

namespace {

constexpr int kConfigSchemaVersion = 1;

// Rejects unknown keys so typos fail loudly instead of silently using a
// default.
void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double get_number(const json& obj, const std::string& where, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number())
    throw ConfigError(where + "." + key + " must be a number");
  return obj.at(key).get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer())
    throw ConfigError(where + "." + key + " must be an integer");
  return obj.at(key).get<int>();
}

bool get_bool(const json& obj, const std::string& where, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean())
    throw ConfigError(where + "." + key + " must be a boolean");
  return obj.at(key).get<bool>();
}

std::string get_string(const json& obj, const std::string& where,
                       const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string())
    throw ConfigError(where + "." + key + " must be a string");
  return obj.at(key).get<std::string>();
}

TrainConfig parse_train(const json& obj, const std::string& where,
                        const TrainConfig& defaults) {
  check_keys(obj, where,
             {"learning_rate", "plateau_factor", "plateau_patience",
              "plateau_rel_threshold", "min_learning_rate", "clip_max_norm",
              "weight_decay", "batch_size", "max_epochs", "input_noise_sigma",
              "val_fraction"});
  TrainConfig cfg = defaults;
  cfg.learning_rate = get_number(obj, where, "learning_rate", cfg.learning_rate);
  cfg.plateau_factor = get_number(obj, where, "plateau_factor", cfg.plateau_factor);
  cfg.plateau_patience = get_int(obj, where, "plateau_patience", cfg.plateau_patience);
  cfg.plateau_rel_threshold =
      get_number(obj, where, "plateau_rel_threshold", cfg.plateau_rel_threshold);
  cfg.min_learning_rate =
      get_number(obj, where, "min_learning_rate", cfg.min_learning_rate);
  cfg.clip_max_norm = get_number(obj, where, "clip_max_norm", cfg.clip_max_norm);
  cfg.weight_decay = get_number(obj, where, "weight_decay", cfg.weight_decay);
  cfg.batch_size = get_int(obj, where, "batch_size", cfg.batch_size);
  cfg.max_epochs = get_int(obj, where, "max_epochs", cfg.max_epochs);
  cfg.input_noise_sigma =
      get_number(obj, where, "input_noise_sigma", cfg.input_noise_sigma);
  cfg.val_fraction = get_number(obj, where, "val_fraction", cfg.val_fraction);
  return cfg;
}

Indenter parse_indenter(const json& obj, const std::string& where) {
  check_keys(obj, where,
             {"shape", "radius_m", "inner_radius_m", "side_m", "arm_length_m",
              "arm_width_m", "yaw_rad"});
  if (!obj.contains("shape"))
    throw ConfigError(where + " is missing 'shape'");
  Indenter ind;
  try {
    ind.shape = indenter_shape_from_string(
        obj.at("shape").get<std::string>());
  } catch (const InvalidArgument& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  ind.radius = get_number(obj, where, "radius_m", 0.0);
  ind.inner_radius = get_number(obj, where, "inner_radius_m", 0.0);
  ind.side = get_number(obj, where, "side_m", 0.0);
  ind.arm_length = get_number(obj, where, "arm_length_m", 0.0);
  ind.arm_width = get_number(obj, where, "arm_width_m", 0.0);
  ind.yaw = get_number(obj, where, "yaw_rad", 0.0);
  try {
    ind.validate();
  } catch (const Error& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  return ind;
}

Trajectory parse_trajectory(const json& obj, const std::string& where) {
  check_keys(obj, where,
             {"profile", "depth_m", "speed_m_per_s", "hold_s", "frame_rate_hz",
              "press_count"});
  const std::string profile_name =
      get_string(obj, where, "profile", "press_hold_release");
  TrajectoryProfile profile;
  try {
    profile = trajectory_profile_from_string(profile_name);
  } catch (const InvalidArgument& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  const double depth = get_number(obj, where, "depth_m", 0.002);
  const double speed = get_number(obj, where, "speed_m_per_s", 0.004);
  const double hold = get_number(obj, where, "hold_s", 0.5);
  const double rate = get_number(obj, where, "frame_rate_hz", 30.0);
  const int presses = get_int(obj, where, "press_count", 3);
  try {
    return make_trajectory(profile, depth, speed, hold, rate, presses);
  } catch (const Error& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
}

}  // namespace

const char* to_string(DtwNormalize mode) {
  return mode == DtwNormalize::kZScore ? "zscore" : "none";
}

const char* to_string(WarpReduce reduce) {
  return reduce == WarpReduce::kMean ? "mean" : "first";
}

std::vector<Vec3> make_taxel_grid(double lx, double ly, double lz, int rows,
                                  int cols, double pitch) {
  if (rows < 1 || cols < 1) throw ConfigError("taxel grid must be >= 1x1");
  if (!(pitch > 0.0)) throw ConfigError("taxel pitch must be positive");
  std::vector<Vec3> taxels;
  taxels.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Vec3 p;
      p.x = 0.5 * lx +
            (static_cast<double>(c) - 0.5 * static_cast<double>(cols - 1)) * pitch;
      p.y = 0.5 * ly +
            (static_cast<double>(r) - 0.5 * static_cast<double>(rows - 1)) * pitch;
      p.z = lz;
      taxels.push_back(p);
    }
  return taxels;
}

void PipelineConfig::validate() const {
  if (!(mesh_lx > 0.0 && mesh_ly > 0.0 && mesh_lz > 0.0))
    throw ConfigError("mesh extents must be positive");
  if (mesh_nx < 1 || mesh_ny < 1 || mesh_nz < 1)
    throw ConfigError("mesh resolution must be >= 1 per axis");
  try {
    material.validate();
    oracle.validate();
    train.validate();
    classifier_train.validate();
  } catch (const Error& ex) {
    throw ConfigError(ex.what());
  }
  if (taxel_rows * taxel_cols != 8)
    throw ConfigError("taxel grid must contain exactly 8 taxels");
  const auto taxels =
      make_taxel_grid(mesh_lx, mesh_ly, mesh_lz, taxel_rows, taxel_cols,
                      taxel_pitch);
  for (const Vec3& t : taxels)
    if (t.x < 0.0 || t.x > mesh_lx || t.y < 0.0 || t.y > mesh_ly)
      throw ConfigError("taxel grid does not fit on the block's top face");
  if (!(cluster_radius > 0.0))
    throw ConfigError("cluster_radius must be positive");
  if (!(top_fraction > 0.0) || top_fraction > 1.0)
    throw ConfigError("top_fraction must lie in (0, 1]");
  if (!(epsilon_floor > 0.0))
    throw ConfigError("epsilon_floor must be positive");
  if (hidden.empty())
    throw ConfigError("regressor needs at least one hidden layer");
  for (std::size_t h : hidden)
    if (h < 1) throw ConfigError("hidden layer width must be >= 1");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
    throw ConfigError("eval_fraction must lie in (0, 1)");
  if (real_trials_per_class < 1 || test_trials_per_class < 1 ||
      sim_trials_per_class < 0)
    throw ConfigError("classification trial counts are out of range");
  if (!(pose_max_offset >= 0.0))
    throw ConfigError("pose_max_offset must be >= 0");
  if (!(pose_min_depth > 0.0) || pose_max_depth < pose_min_depth)
    throw ConfigError("pose depth range is invalid");
  if (pose_max_depth >= 0.5 * mesh_lz)
    throw ConfigError("pose_max_depth must stay below half the block height");
  if (pose_max_yaw < 0.0)
    throw ConfigError("pose_max_yaw must be >= 0");
  if (indenters.empty()) throw ConfigError("need at least one indenter");
  if (locations.empty()) throw ConfigError("need at least one location");
  if (trajectories.empty()) throw ConfigError("need at least one trajectory");
  for (const auto& loc : locations)
    if (loc[0] < 0.0 || loc[0] > mesh_lx || loc[1] < 0.0 || loc[1] > mesh_ly)
      throw ConfigError("location outside the block's top face");
  for (const auto& traj : trajectories) {
    try {
      traj.validate();
    } catch (const Error& ex) {
      throw ConfigError(ex.what());
    }
    double max_depth = 0.0;
    for (const auto& s : traj.samples) max_depth = std::max(max_depth, s.depth);
    if (max_depth >= 0.5 * mesh_lz)
      throw ConfigError("trajectory depth must stay below half the block height");
  }
  if (render_width < 1 || render_height < 1)
    throw ConfigError("render grid must be >= 1x1");
  if (!(rbf_sigma > 0.0)) throw ConfigError("rbf_sigma must be positive");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
  // Classifier structure; labels are derived from the indenter list.
  if (classifier.labels.size() != indenters.size())
    throw ConfigError("classifier labels must match the indenter list");
  try {
    if (indenters.size() >= 2) classifier.validate();
  } catch (const Error& ex) {
    throw ConfigError(ex.what());
  }
}

PipelineConfig load_pipeline_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const IoError& ex) {
    throw ConfigError(ex.what());
  } catch (const json::exception& ex) {
    throw ConfigError("malformed config " + path + ": " + ex.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  check_keys(doc, "config",
             {"schema_version", "seed", "out_dir", "mesh", "material", "solver",
              "taxels", "oracle", "alignment", "features", "train",
              "classifier", "render", "indenters", "locations",
              "trajectories"});
  if (get_int(doc, "config", "schema_version", kConfigSchemaVersion) !=
      kConfigSchemaVersion)
    throw ConfigError("unsupported config schema_version");

  PipelineConfig cfg;
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned())
      throw ConfigError("config.seed must be a nonnegative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  cfg.out_dir = get_string(doc, "config", "out_dir", cfg.out_dir);

  if (doc.contains("mesh")) {
    const json& m = doc.at("mesh");
    check_keys(m, "mesh", {"lx_m", "ly_m", "lz_m", "nx", "ny", "nz"});
    cfg.mesh_lx = get_number(m, "mesh", "lx_m", cfg.mesh_lx);
    cfg.mesh_ly = get_number(m, "mesh", "ly_m", cfg.mesh_ly);
    cfg.mesh_lz = get_number(m, "mesh", "lz_m", cfg.mesh_lz);
    cfg.mesh_nx = get_int(m, "mesh", "nx", cfg.mesh_nx);
    cfg.mesh_ny = get_int(m, "mesh", "ny", cfg.mesh_ny);
    cfg.mesh_nz = get_int(m, "mesh", "nz", cfg.mesh_nz);
  }
  if (doc.contains("material")) {
    const json& m = doc.at("material");
    check_keys(m, "material", {"young_modulus_pa", "poisson_ratio"});
    cfg.material.young_modulus =
        get_number(m, "material", "young_modulus_pa", cfg.material.young_modulus);
    cfg.material.poisson_ratio =
        get_number(m, "material", "poisson_ratio", cfg.material.poisson_ratio);
  }
  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    check_keys(s, "solver", {"tolerance", "max_iterations"});
    cfg.solver.tolerance = get_number(s, "solver", "tolerance", cfg.solver.tolerance);
    cfg.solver.max_iterations = static_cast<std::size_t>(
        get_int(s, "solver", "max_iterations",
                static_cast<int>(cfg.solver.max_iterations)));
  }
  if (doc.contains("taxels")) {
    const json& t = doc.at("taxels");
    check_keys(t, "taxels",
               {"rows", "cols", "pitch_m", "cluster_radius_m", "top_fraction"});
    cfg.taxel_rows = get_int(t, "taxels", "rows", cfg.taxel_rows);
    cfg.taxel_cols = get_int(t, "taxels", "cols", cfg.taxel_cols);
    cfg.taxel_pitch = get_number(t, "taxels", "pitch_m", cfg.taxel_pitch);
    cfg.cluster_radius =
        get_number(t, "taxels", "cluster_radius_m", cfg.cluster_radius);
    cfg.top_fraction = get_number(t, "taxels", "top_fraction", cfg.top_fraction);
  }
  if (doc.contains("oracle")) {
    const json& o = doc.at("oracle");
    check_keys(o, "oracle",
               {"sensitivity_kpa_per_n", "quantization_kpa", "sample_rate_hz",
                "baselines_kpa", "footprint_sigma_m", "lag_time_constant_s",
                "latency_s", "noise_sigma_kpa", "force_noise_sigma_n"});
    cfg.oracle.sensitivity_kpa_per_n = get_number(
        o, "oracle", "sensitivity_kpa_per_n", cfg.oracle.sensitivity_kpa_per_n);
    cfg.oracle.quantization_kpa =
        get_number(o, "oracle", "quantization_kpa", cfg.oracle.quantization_kpa);
    cfg.oracle.sample_rate_hz =
        get_number(o, "oracle", "sample_rate_hz", cfg.oracle.sample_rate_hz);
    if (o.contains("baselines_kpa")) {
      const json& b = o.at("baselines_kpa");
      if (!b.is_array() || b.size() != 8)
        throw ConfigError("oracle.baselines_kpa must be an array of 8 numbers");
      for (std::size_t i = 0; i < 8; ++i)
        cfg.oracle.baselines_kpa[i] = b.at(i).get<double>();
    }
    cfg.oracle.footprint_sigma_m =
        get_number(o, "oracle", "footprint_sigma_m", cfg.oracle.footprint_sigma_m);
    cfg.oracle.lag_time_constant_s = get_number(
        o, "oracle", "lag_time_constant_s", cfg.oracle.lag_time_constant_s);
    cfg.oracle.latency_s = get_number(o, "oracle", "latency_s", cfg.oracle.latency_s);
    cfg.oracle.noise_sigma_kpa =
        get_number(o, "oracle", "noise_sigma_kpa", cfg.oracle.noise_sigma_kpa);
    cfg.oracle.force_noise_sigma_n = get_number(
        o, "oracle", "force_noise_sigma_n", cfg.oracle.force_noise_sigma_n);
  }
  if (doc.contains("alignment")) {
    const json& a = doc.at("alignment");
    check_keys(a, "alignment", {"normalize", "reduce"});
    const std::string normalize = get_string(a, "alignment", "normalize", "zscore");
    if (normalize == "zscore")
      cfg.align_normalize = DtwNormalize::kZScore;
    else if (normalize == "none")
      cfg.align_normalize = DtwNormalize::kNone;
    else
      throw ConfigError("alignment.normalize must be 'zscore' or 'none'");
    const std::string reduce = get_string(a, "alignment", "reduce", "mean");
    if (reduce == "mean")
      cfg.align_reduce = WarpReduce::kMean;
    else if (reduce == "first")
      cfg.align_reduce = WarpReduce::kFirst;
    else
      throw ConfigError("alignment.reduce must be 'mean' or 'first'");
  }
  if (doc.contains("features")) {
    const json& f = doc.at("features");
    check_keys(f, "features", {"epsilon_floor_m"});
    cfg.epsilon_floor = get_number(f, "features", "epsilon_floor_m", cfg.epsilon_floor);
  }
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    if (t.contains("hidden")) {
      if (!t.at("hidden").is_array())
        throw ConfigError("train.hidden must be an array");
      cfg.hidden.clear();
      for (const auto& h : t.at("hidden"))
        cfg.hidden.push_back(h.get<std::size_t>());
    }
    cfg.eval_fraction =
        get_number(t, "train", "eval_trial_fraction", cfg.eval_fraction);
    json rest = t;
    rest.erase("hidden");
    rest.erase("eval_trial_fraction");
    cfg.train = parse_train(rest, "train", cfg.train);
  }
  if (doc.contains("classifier")) {
    const json& c = doc.at("classifier");
    check_keys(c, "classifier",
               {"seq_len", "d_model", "num_blocks", "num_heads", "ff_dim",
                "train", "real_trials_per_class", "test_trials_per_class",
                "sim_trials_per_class", "pose"});
    cfg.classifier.seq_len = static_cast<std::size_t>(
        get_int(c, "classifier", "seq_len",
                static_cast<int>(cfg.classifier.seq_len)));
    cfg.classifier.d_model = static_cast<std::size_t>(
        get_int(c, "classifier", "d_model",
                static_cast<int>(cfg.classifier.d_model)));
    cfg.classifier.num_blocks = static_cast<std::size_t>(
        get_int(c, "classifier", "num_blocks",
                static_cast<int>(cfg.classifier.num_blocks)));
    cfg.classifier.num_heads = static_cast<std::size_t>(
        get_int(c, "classifier", "num_heads",
                static_cast<int>(cfg.classifier.num_heads)));
    cfg.classifier.ff_dim = static_cast<std::size_t>(
        get_int(c, "classifier", "ff_dim",
                static_cast<int>(cfg.classifier.ff_dim)));
    if (c.contains("train"))
      cfg.classifier_train =
          parse_train(c.at("train"), "classifier.train", cfg.classifier_train);
    cfg.real_trials_per_class = get_int(c, "classifier", "real_trials_per_class",
                                        cfg.real_trials_per_class);
    cfg.test_trials_per_class = get_int(c, "classifier", "test_trials_per_class",
                                        cfg.test_trials_per_class);
    cfg.sim_trials_per_class = get_int(c, "classifier", "sim_trials_per_class",
                                       cfg.sim_trials_per_class);
    if (c.contains("pose")) {
      const json& p = c.at("pose");
      check_keys(p, "classifier.pose",
                 {"max_offset_m", "min_depth_m", "max_depth_m", "max_yaw_rad"});
      cfg.pose_max_offset =
          get_number(p, "classifier.pose", "max_offset_m", cfg.pose_max_offset);
      cfg.pose_min_depth =
          get_number(p, "classifier.pose", "min_depth_m", cfg.pose_min_depth);
      cfg.pose_max_depth =
          get_number(p, "classifier.pose", "max_depth_m", cfg.pose_max_depth);
      cfg.pose_max_yaw =
          get_number(p, "classifier.pose", "max_yaw_rad", cfg.pose_max_yaw);
    }
  }
  if (doc.contains("render")) {
    const json& r = doc.at("render");
    check_keys(r, "render",
               {"width", "height", "rbf_sigma_m", "rbf_mode", "negated_sign"});
    cfg.render_width = static_cast<std::size_t>(
        get_int(r, "render", "width", static_cast<int>(cfg.render_width)));
    cfg.render_height = static_cast<std::size_t>(
        get_int(r, "render", "height", static_cast<int>(cfg.render_height)));
    cfg.rbf_sigma = get_number(r, "render", "rbf_sigma_m", cfg.rbf_sigma);
    const std::string mode = get_string(r, "render", "rbf_mode", "direct");
    if (mode == "direct")
      cfg.rbf_exact = false;
    else if (mode == "exact")
      cfg.rbf_exact = true;
    else
      throw ConfigError("render.rbf_mode must be 'direct' or 'exact'");
    cfg.rbf_negated_sign =
        get_bool(r, "render", "negated_sign", cfg.rbf_negated_sign);
  }

  if (!doc.contains("indenters") || !doc.at("indenters").is_array())
    throw ConfigError("config.indenters must be an array");
  std::size_t index = 0;
  for (const auto& entry : doc.at("indenters"))
    cfg.indenters.push_back(
        parse_indenter(entry, "indenters[" + std::to_string(index++) + "]"));

  if (!doc.contains("locations") || !doc.at("locations").is_array())
    throw ConfigError("config.locations must be an array");
  for (const auto& entry : doc.at("locations")) {
    if (!entry.is_array() || entry.size() != 2)
      throw ConfigError("each location must be an [x, y] pair");
    cfg.locations.push_back({entry.at(0).get<double>(), entry.at(1).get<double>()});
  }

  if (!doc.contains("trajectories") || !doc.at("trajectories").is_array())
    throw ConfigError("config.trajectories must be an array");
  index = 0;
  for (const auto& entry : doc.at("trajectories"))
    cfg.trajectories.push_back(parse_trajectory(
        entry, "trajectories[" + std::to_string(index++) + "]"));

  // One class per indenter; duplicate shape names get an index suffix.
  cfg.classifier.channels = 8;
  cfg.classifier.labels.clear();
  std::set<std::string> used;
  for (const Indenter& ind : cfg.indenters) {
    std::string label = to_string(ind.shape);
    int suffix = 2;
    while (used.count(label) > 0)
      label = std::string(to_string(ind.shape)) + "_" + std::to_string(suffix++);
    used.insert(label);
    cfg.classifier.labels.push_back(label);
  }

  cfg.validate();
  return cfg;
}

}  // namespace tacsim
