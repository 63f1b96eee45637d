#include "abov/io/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>

#include "abov/errors.hpp"
#include "abov/synthetic.hpp"

namespace abov::io {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false, got '" + std::string(text) + "'");
}

template <typename T>
std::string format_number(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number_field(std::string key, T RunConfig::*member) {
  return {key, [key, member](RunConfig& c, std::string_view v) { c.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) { return format_number(c.*member); }};
}

template <typename T>
Field model_field(std::string key, T DenoiserConfig::*member) {
  return {key, [key, member](RunConfig& c, std::string_view v) { c.model.*member = parse_number<T>(key, v); },
          [member](const RunConfig& c) { return format_number(c.model.*member); }};
}

Field adam_field(std::string key, double AdamConfig::*member) {
  return {key, [key, member](RunConfig& c, std::string_view v) { c.adam.*member = parse_number<double>(key, v); },
          [member](const RunConfig& c) { return format_number(c.adam.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      model_field("frame_h", &DenoiserConfig::frame_h),
      model_field("frame_w", &DenoiserConfig::frame_w),
      model_field("channels", &DenoiserConfig::channels),
      model_field("patch_h", &DenoiserConfig::patch_h),
      model_field("patch_w", &DenoiserConfig::patch_w),
      model_field("hidden", &DenoiserConfig::hidden),
      model_field("depth", &DenoiserConfig::depth),
      model_field("heads", &DenoiserConfig::heads),
      model_field("L", &DenoiserConfig::window),
      {"bov_enabled", [](RunConfig& c, std::string_view v) { c.model.bov_enabled = parse_bool("bov_enabled", v); },
       [](const RunConfig& c) { return std::string(c.model.bov_enabled ? "true" : "false"); }},
      number_field("n", &RunConfig::substeps),
      number_field("frames", &RunConfig::frames),
      number_field("seed", &RunConfig::seed),
      number_field("append_noise_scale", &RunConfig::append_noise_scale),
      number_field("T", &RunConfig::max_timestep),
      number_field("beta_start", &RunConfig::beta_start),
      number_field("beta_end", &RunConfig::beta_end),
      number_field("steps", &RunConfig::steps),
      number_field("batch", &RunConfig::batch),
      {"schedule", [](RunConfig& c, std::string_view v) { c.schedule = parse_schedule_kind(v); },
       [](const RunConfig& c) { return std::string(schedule_kind_name(c.schedule)); }},
      adam_field("lr", &AdamConfig::lr),
      adam_field("beta1", &AdamConfig::beta1),
      adam_field("beta2", &AdamConfig::beta2),
      adam_field("adam_eps", &AdamConfig::eps),
      {"data", [](RunConfig& c, std::string_view v) { c.data = parse_data_source(v); },
       [](const RunConfig& c) { return std::string(data_source_name(c.data)); }},
      number_field("rho", &RunConfig::rho),
      number_field("bar_width", &RunConfig::bar_width),
      number_field("bar_velocity", &RunConfig::bar_velocity),
      number_field("video_length", &RunConfig::video_length),
  };
  return table;
}

}  // namespace

DataSource parse_data_source(std::string_view name) {
  if (name == "ar1") return DataSource::Ar1;
  if (name == "bar") return DataSource::MovingBar;
  throw ConfigError("unknown data source '" + std::string(name) + "' (expected ar1 or bar)");
}

std::string_view data_source_name(DataSource source) {
  return source == DataSource::Ar1 ? "ar1" : "bar";
}

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  model.validate();
  generation().validate();
  (void)variance_schedule();
  if (steps < 1) throw ConfigError("config: steps must be >= 1");
  if (batch < 1) throw ConfigError("config: batch must be >= 1");
  if (!(adam.lr >= 0.0)) throw ConfigError("config: lr must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("config: beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("config: beta2 must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("config: adam_eps must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("config: rho must lie in [0, 1)");
  if (bar_width < 1) throw ConfigError("config: bar_width must be >= 1");
  if (video_length < model.window + 1) throw ConfigError("config: video_length must be at least L + 1");
  if (!(append_noise_scale >= 0.0)) throw ConfigError("config: append_noise_scale must be >= 0");
}

GenerationConfig RunConfig::generation() const {
  GenerationConfig g;
  g.window = model.window;
  g.substeps = substeps;
  g.frames = frames;
  g.seed = seed;
  g.bov_enabled = model.bov_enabled;
  g.append_noise_scale = append_noise_scale;
  return g;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions t;
  t.steps = steps;
  t.batch = batch;
  t.kind = schedule;
  t.adam = adam;
  t.seed = seed;
  return t;
}

VarianceSchedule RunConfig::variance_schedule() const { return build_schedule(max_timestep, beta_start, beta_end); }

Frames RunConfig::dataset(const Rng& rng) const {
  if (data == DataSource::Ar1) {
    Rng stream = rng.split("dataset");
    return gen_ar1_video({rho, model.frame_shape()}, video_length, stream);
  }
  MovingBarParams p;
  p.frame_shape = model.frame_shape();
  p.bar_width = bar_width;
  p.velocity = bar_velocity;
  return gen_moving_bar_video(p, video_length);
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace abov::io
