#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tacsim/config.hpp"
#include "tacsim/errors.hpp"
#include "tacsim/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;       // empty -> keep the config's out_dir
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  bool verbose = false;
};

void add_common_options(CLI::App* sub, CliOptions& options) {
  sub->add_option("--config", options.config_path, "Pipeline config (JSON)")
      ->required();
  sub->add_option_function<std::uint64_t>(
         "--seed",
         [&options](std::uint64_t value) {
           options.seed = value;
           options.seed_set = true;
         },
         "Master seed; overrides the config's seed");
  sub->add_option("--out", options.out_dir,
                  "Output directory; overrides the config's out_dir");
  sub->add_option("--threads", options.threads,
                  "Worker thread budget (stages currently run on one)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--verbose", options.verbose, "Print per-stage progress");
}

void note(const CliOptions& options, const std::string& message) {
  if (options.verbose) std::cerr << "[tacsim] " << message << "\n";
}

void print_fidelity(const tacsim::EvalSummary& summary) {
  std::printf("fidelity_pct=%.4f\n", summary.fidelity_pct);
  std::printf("mean_abs_error_kpa=%.6f max_gauge_kpa=%.6f trials=%zu frames=%zu\n",
              summary.mean_abs_error_kpa, summary.max_gauge_kpa,
              summary.trial_count, summary.frame_count);
}

void print_confusion(const std::vector<std::string>& labels,
                     const std::vector<std::vector<std::size_t>>& confusion) {
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    std::printf("  %-12s", labels[r].c_str());
    for (std::size_t value : confusion[r]) std::printf(" %3zu", value);
    std::printf("\n");
  }
}

int run(const std::string& command, const CliOptions& options) {
  tacsim::PipelineConfig config =
      tacsim::load_pipeline_config(options.config_path);
  if (options.seed_set) config.seed = options.seed;
  if (!options.out_dir.empty()) config.out_dir = options.out_dir;

  if (command == "mesh-gen") {
    const tacsim::TetMesh mesh = tacsim::stage_mesh_gen(config);
    std::printf("mesh: %zu vertices, %zu tets -> %s/mesh.txt\n",
                mesh.vertex_count(), mesh.tet_count(), config.out_dir.c_str());
  } else if (command == "simulate") {
    note(options, "simulate");
    const tacsim::BatchOutcome outcome = tacsim::stage_simulate(config);
    std::printf("simulated %zu trials (%zu failed) -> %s/trials\n",
                outcome.recorded_ids.size(), outcome.failures.size(),
                config.out_dir.c_str());
    for (const auto& [id, message] : outcome.failures)
      std::fprintf(stderr, "warning: trial %s failed: %s\n", id.c_str(),
                   message.c_str());
  } else if (command == "oracle") {
    note(options, "oracle");
    tacsim::stage_oracle(config);
    std::printf("emulated sensor traces for all trials\n");
  } else if (command == "align") {
    note(options, "align");
    tacsim::stage_align(config);
    std::printf("aligned sensor traces onto the simulation timeline\n");
  } else if (command == "features") {
    note(options, "features");
    tacsim::stage_features(config);
    std::printf("built feature/target pairs for all trials\n");
  } else if (command == "train") {
    note(options, "train");
    const tacsim::TrainReport report = tacsim::stage_train(config);
    std::printf("trained regressor: %zu epochs, best_val_loss=%.6f "
                "(epoch %d) -> %s/models/taxel_mlp.json\n",
                report.train_loss.size(), report.best_val_loss,
                report.best_epoch, config.out_dir.c_str());
  } else if (command == "predict") {
    note(options, "predict");
    tacsim::stage_predict(config);
    std::printf("wrote predicted traces for all trials\n");
  } else if (command == "eval") {
    note(options, "eval");
    print_fidelity(tacsim::stage_eval(config));
  } else if (command == "render") {
    note(options, "render");
    tacsim::stage_render(config);
    std::printf("wrote pressure maps -> %s/renders\n", config.out_dir.c_str());
  } else if (command == "classify-train") {
    note(options, "classify-train");
    tacsim::stage_classify_train(config);
    std::printf("trained classifiers -> %s/models\n", config.out_dir.c_str());
  } else if (command == "classify-eval") {
    note(options, "classify-eval");
    const tacsim::ClassifySummary summary =
        tacsim::stage_classify_eval(config);
    std::printf("real_only_accuracy=%.4f\n", summary.real_only.accuracy);
    std::printf("hybrid_accuracy=%.4f\n", summary.hybrid.accuracy);
    std::printf("confusion (real-only), rows = true class:\n");
    print_confusion(summary.labels, summary.real_only.confusion);
    std::printf("confusion (hybrid), rows = true class:\n");
    print_confusion(summary.labels, summary.hybrid.confusion);
  } else if (command == "pipeline") {
    note(options, "pipeline");
    const tacsim::EvalSummary summary = tacsim::stage_pipeline(config);
    print_fidelity(summary);
  } else {
    std::fprintf(stderr, "error: unknown command %s\n", command.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-twin tactile sensing toolkit"};
  app.require_subcommand(1);
  CliOptions options;

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"mesh-gen", "Generate the elastomer block mesh"},
      {"simulate", "Run the indentation batch"},
      {"oracle", "Emulate the hardware sensor for every trial"},
      {"align", "Warp sensor traces onto the simulation timeline"},
      {"features", "Aggregate stress features and build training pairs"},
      {"train", "Train the feature-to-pressure regressor"},
      {"predict", "Predict sensor traces for every trial"},
      {"eval", "Score held-out predictions against the sensor traces"},
      {"render", "Render oracle vs predicted pressure maps"},
      {"classify-train", "Train shape classifiers (real-only and hybrid)"},
      {"classify-eval", "Evaluate both classifiers on held-out trials"},
      {"pipeline", "Run every stage through eval and render"},
  };
  for (const auto& [name, description] : commands)
    add_common_options(app.add_subcommand(name, description), options);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, options);
  } catch (const tacsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tacsim::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tacsim::MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tacsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
