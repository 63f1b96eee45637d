#include "abov/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <regex>
#include <string_view>

#include "abov/errors.hpp"
#include "abov/io/bench.hpp"
#include "abov/io/checkpoint.hpp"
#include "abov/io/config.hpp"
#include "abov/io/frame_file.hpp"
#include "abov/io/metrics.hpp"
#include "abov/stream.hpp"
#include "abov/synthetic.hpp"
#include "abov/training.hpp"

namespace abov::cli {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kRunConfigName = "run.cfg";
constexpr std::string_view kManifestName = "manifest.csv";

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

// Parses `args` with `app` and runs `body`, mapping failures onto exit codes.
template <typename Body>
int guarded(CLI::App& app, const Args& args, std::ostream& out, std::ostream& err, Body&& body) {
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return kExitBadConfig;
  }
  try {
    return body();
  } catch (const CorruptCheckpointError& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return kExitCorruptCheckpoint;
  } catch (const VersionError& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return kExitCorruptCheckpoint;
  } catch (const NumericsError& e) {
    err << app.get_name() << ": numerical failure: " << e.what() << "\n";
    return kExitNumerics;
  } catch (const ConfigError& e) {
    err << app.get_name() << ": bad configuration: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const DataError& e) {
    err << app.get_name() << ": bad input: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const IoError& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;

  void attach(CLI::App& app) {
    app.add_option("--config", path, "flat key = value config file");
    app.add_option("--set", overrides, "override one config key (key=value), repeatable");
  }

  io::RunConfig load() const {
    io::RunConfig cfg = path.empty() ? io::RunConfig{} : io::load_config(path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

std::string frame_stem(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05lld", static_cast<long long>(index));
  return buf;
}

Frames split_frames(const Tensor<float>& stacked, const Shape& frame_shape, std::size_t count) {
  Shape expected{count};
  expected.insert(expected.end(), frame_shape.begin(), frame_shape.end());
  if (stacked.shape() != expected) {
    throw ConfigError("conditioning tensor has shape " + shape_str(stacked.shape()) + ", expected " +
                      shape_str(expected));
  }
  const std::size_t n = shape_numel(frame_shape);
  Frames frames;
  for (std::size_t i = 0; i < count; ++i) {
    const auto src = stacked.data().subspan(i * n, n);
    frames.push_back(Frame::from(frame_shape, std::vector<float>(src.begin(), src.end())));
  }
  return frames;
}

}  // namespace

int cli_train(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Train the stream denoiser on synthetic video", "abov train");
  ConfigFlags config_flags;
  config_flags.attach(app);
  std::optional<std::string> schedule, data;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::string out_path = "model.abov";
  std::string loss_csv;
  app.add_option("--schedule", schedule, "progressive | random | dist-aug");
  app.add_option("--steps", steps, "optimizer steps");
  app.add_option("--seed", seed, "seed for initialization, data and training noise");
  app.add_option("--data", data, "ar1 | bar");
  app.add_option("--lr", lr, "Adam learning rate");
  app.add_option("--out", out_path, "checkpoint path");
  app.add_option("--loss-csv", loss_csv, "loss history path (default: <out> with .loss.csv)");

  return guarded(app, args, out, err, [&] {
    io::RunConfig cfg = config_flags.load();
    if (schedule) cfg.set("schedule", *schedule);
    if (data) cfg.set("data", *data);
    if (steps) cfg.steps = *steps;
    if (seed) cfg.seed = *seed;
    if (lr) cfg.adam.lr = *lr;
    cfg.validate();

    const VarianceSchedule sched = cfg.variance_schedule();
    const Frames dataset = cfg.dataset(Rng(cfg.seed));
    AdaBovDenoiser<float> model(cfg.model, cfg.seed);
    const TrainResult result = train(model, dataset, sched, cfg.train_options());

    io::save_checkpoint(model, out_path);
    if (loss_csv.empty()) loss_csv = fs::path(out_path).replace_extension(".loss.csv").string();
    std::string csv = "step,loss\n";
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
      csv += std::to_string(i + 1) + "," + fmt(result.loss_history[i]) + "\n";
    }
    write_text(loss_csv, csv);
    out << "trained " << result.loss_history.size() << " steps, loss " << fmt(result.loss_history.front())
        << " -> " << fmt(result.loss_history.back()) << "\n";
    out << "checkpoint: " << out_path << "\nloss history: " << loss_csv << "\n";
    return kExitOk;
  });
}

int cli_sample(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Generate frames by stream denoising", "abov sample");
  ConfigFlags config_flags;
  config_flags.attach(app);
  std::string ckpt, cond;
  bool oracle = false, self_start = false;
  std::optional<int> frames, substeps, window;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "samples";
  std::string export_kind = "flt1";
  auto* ckpt_opt = app.add_option("--ckpt", ckpt, "trained checkpoint");
  auto* oracle_opt = app.add_flag("--oracle", oracle, "use the closed-form predictor for Gaussian data");
  ckpt_opt->excludes(oracle_opt);
  app.add_option("--frames", frames, "number of frames to emit (K)");
  app.add_option("--n", substeps, "substeps per emitted frame");
  app.add_option("--L", window, "attention window");
  app.add_option("--seed", seed, "sampling seed");
  auto* cond_opt = app.add_option("--cond", cond, "FLT1 tensor of L + 1 clean frames [L+1, C, H, W]");
  auto* self_opt = app.add_flag("--self-start", self_start, "replicate one synthetic frame as conditioning");
  cond_opt->excludes(self_opt);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--export", export_kind, "flt1 | pgm | both")->check(CLI::IsMember({"flt1", "pgm", "both"}));

  return guarded(app, args, out, err, [&] {
    if (ckpt.empty() == !oracle) throw ConfigError("choose exactly one of --ckpt or --oracle");
    io::RunConfig cfg = config_flags.load();
    if (frames) cfg.frames = *frames;
    if (substeps) cfg.substeps = *substeps;
    if (seed) cfg.seed = *seed;

    std::optional<AdaBovDenoiser<float>> model;
    if (!ckpt.empty()) {
      model.emplace(io::load_checkpoint(ckpt));
      if (window && *window != model->config().window) {
        throw ConfigError("--L " + std::to_string(*window) + " does not match the checkpoint window " +
                          std::to_string(model->config().window));
      }
      cfg.model = model->config();
    } else if (window) {
      cfg.model.window = *window;
    }
    cfg.validate();

    const VarianceSchedule sched = cfg.variance_schedule();
    const GenerationConfig gen = cfg.generation();
    const Rng root(cfg.seed);
    const auto count = static_cast<std::size_t>(gen.window) + 1;

    StreamState state;
    if (!cond.empty()) {
      const Frames initial = split_frames(io::read_flt1(cond), cfg.model.frame_shape(), count);
      state = init_stream(initial, gen, sched, root.split("sample"));
    } else if (self_start) {
      const Frames data = cfg.dataset(root);
      state = init_stream_self_start(data.front(), gen, sched, root.split("sample"));
    } else {
      const Frames data = cfg.dataset(root);
      state = init_stream(std::span<const Frame>(data.data(), count), gen, sched, root.split("sample"));
    }

    std::unique_ptr<EpsPredictor> predictor;
    if (model) {
      predictor = std::make_unique<ModelPredictor>(*model);
    } else {
      predictor = std::make_unique<OraclePredictor>(sched);
    }
    const std::vector<EmittedFrame> emitted = run(state, *predictor, gen.frames);

    fs::create_directories(out_dir);
    const bool want_flt1 = export_kind != "pgm";
    const bool want_pgm = export_kind != "flt1";
    std::string manifest = "index,checksum\n";
    for (const auto& f : emitted) {
      const io::Bytes flt1 = io::encode_flt1(f.values);
      const std::string stem = frame_stem(f.frame_index);
      if (want_flt1) io::write_file(fs::path(out_dir) / (stem + ".flt1"), flt1);
      if (want_pgm) io::write_pgm(fs::path(out_dir) / (stem + ".pgm"), f.values);
      manifest += std::to_string(f.frame_index) + "," + hex32(io::crc32(flt1)) + "\n";
    }
    write_text(fs::path(out_dir) / kManifestName, manifest);
    write_text(fs::path(out_dir) / kRunConfigName, cfg.to_text());
    out << "emitted " << emitted.size() << " frames with " << state.evaluations << " denoiser evaluations into "
        << out_dir << "\n";
    return kExitOk;
  });
}

int cli_bench(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Time stream sampling across window sizes and substep counts", "abov bench");
  io::BenchOptions options;
  std::string config_path, csv_path;
  app.add_option("--L", options.windows, "window sizes, comma separated")->delimiter(',');
  app.add_option("--n", options.substeps, "substep counts, comma separated")->delimiter(',');
  app.add_option("--frames", options.frames, "timed frames per repeat");
  app.add_option("--repeats", options.repeats, "repeats per case; the median is reported");
  app.add_option("--warmup", options.warmup, "untimed frames before each repeat");
  app.add_option("--seed", options.seed, "seed for weights and noise");
  app.add_option("--config", config_path, "config supplying the model shape (default: attention-bound toy model)");
  app.add_option("--out", csv_path, "CSV path (default: stdout)");

  return guarded(app, args, out, err, [&] {
    io::RunConfig cfg;
    if (!config_path.empty()) {
      cfg = io::load_config(config_path);
      options.model = cfg.model;
    }
    options.threads = io::bench_threads_from_env();
    const VarianceSchedule sched = cfg.variance_schedule();
    const auto rows = io::run_bench(options, sched);
    std::string csv = "L,n,seconds_per_frame,denoiser_evals_per_frame\n";
    for (const auto& r : rows) {
      csv += std::to_string(r.window) + "," + std::to_string(r.substeps) + "," + fmt(r.seconds_per_frame) + "," +
             fmt(r.evals_per_frame) + "\n";
    }
    if (csv_path.empty()) {
      out << csv;
    } else {
      write_text(csv_path, csv);
    }
    return kExitOk;
  });
}

int cli_eval(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Summary statistics of a directory of FLT1 frames", "abov eval");
  std::string dir, csv_path, config_path;
  bool oracle_stats = false;
  app.add_option("--frames", dir, "directory of frame_*.flt1 files")->required();
  app.add_flag("--oracle-stats", oracle_stats, "compare variance with the closed-form Gaussian prediction");
  app.add_option("--config", config_path, "run config (default: run.cfg in the frame directory)");
  app.add_option("--out", csv_path, "CSV path (default: stdout)");

  return guarded(app, args, out, err, [&] {
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir);
    static const std::regex pattern(R"(frame_(\d+)\.flt1)");
    std::vector<std::pair<std::int64_t, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && std::regex_match(name, m, pattern)) {
        files.emplace_back(std::stoll(m[1].str()), entry.path());
      }
    }
    if (files.empty()) throw ConfigError("no frame_*.flt1 files in " + dir);
    std::sort(files.begin(), files.end());

    Frames frames;
    for (const auto& [index, path] : files) frames.push_back(io::read_flt1(path));
    const io::FrameStatistics stats = io::frame_statistics(frames);

    std::string header = "frames,mean,variance,consistency,dynamic_degree";
    std::string row = std::to_string(stats.frames) + "," + fmt(stats.mean) + "," + fmt(stats.variance) + "," +
                      fmt(stats.consistency) + "," + fmt(stats.dynamic_degree);
    if (oracle_stats) {
      const fs::path cfg_path = config_path.empty() ? fs::path(dir) / kRunConfigName : fs::path(config_path);
      const io::RunConfig cfg = io::load_config(cfg_path);
      const VarianceSchedule sched = cfg.variance_schedule();
      double predicted = 0.0;
      for (const auto& [index, path] : files) {
        predicted += oracle_emitted_variance(sched, cfg.model.window, cfg.substeps, index);
      }
      predicted /= static_cast<double>(files.size());
      header += ",predicted_variance,variance_rel_error";
      row += "," + fmt(predicted) + "," + fmt(std::abs(stats.variance - predicted) / predicted);
    }
    const std::string csv = header + "\n" + row + "\n";
    if (csv_path.empty()) {
      out << csv;
    } else {
      write_text(csv_path, csv);
    }
    return kExitOk;
  });
}

int cli_gradcheck(const Args& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Finite-difference check of the full model gradient in 64-bit", "abov gradcheck");
  DenoiserConfig config;
  config.frame_h = 4;
  config.frame_w = 4;
  config.channels = 1;
  config.patch_h = 2;
  config.patch_w = 2;
  config.hidden = 16;
  config.depth = 2;
  config.heads = 2;
  config.window = 2;
  std::uint64_t seed = 42;
  GradCheckOptions options;
  app.add_option("--seed", seed, "seed for weights, perturbation and batch");
  app.add_option("--hidden", config.hidden, "hidden width");
  app.add_option("--depth", config.depth, "transformer blocks");
  app.add_option("--heads", config.heads, "attention heads");
  app.add_option("--L", config.window, "window size");
  app.add_option("--tol", options.tol, "maximum relative error");
  app.add_option("--max-coords", options.max_coords_per_tensor, "coordinates sampled per tensor (0 = all)");

  return guarded(app, args, out, err, [&] {
    config.validate();
    options.seed = seed;
    const GradCheckReport report = denoiser_grad_check(config, seed, options);
    out << "max_rel_error=" << fmt(report.max_rel_error) << " max_abs_error=" << fmt(report.max_abs_error)
        << " checked=" << report.checked << " worst=" << report.worst << " " << (report.passed ? "PASS" : "FAIL")
        << "\n";
    return report.passed ? kExitOk : kExitFailure;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  static const std::vector<std::pair<std::string_view, int (*)(const Args&, std::ostream&, std::ostream&)>>
      commands = {{"train", cli_train},
                  {"sample", cli_sample},
                  {"bench", cli_bench},
                  {"eval", cli_eval},
                  {"gradcheck", cli_gradcheck}};
  const auto usage = [&](std::ostream& os) {
    os << "usage: abov <command> [options]\n\ncommands:\n";
    for (const auto& [name, fn] : commands) os << "  " << name << "\n";
    os << "\nRun 'abov <command> --help' for the options of one command.\n";
  };
  if (argc < 2) {
    usage(err);
    return kExitBadConfig;
  }
  const std::string_view name = argv[1];
  if (name == "-h" || name == "--help" || name == "help") {
    usage(out);
    return kExitOk;
  }
  for (const auto& [cmd, fn] : commands) {
    if (cmd == name) return fn(Args(argv + 2, argv + argc), out, err);
  }
  err << "abov: unknown command '" << name << "'\n";
  usage(err);
  return kExitBadConfig;
}

}  // namespace abov::cli
