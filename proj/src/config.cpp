#include "multiroi/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>

#include "multiroi/errors.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace {

[[noreturn]] void invalid(std::string_view op, std::string detail) {
  throw Error(ErrorCode::InvalidConfig, "cli_config_io", std::string(op), std::move(detail));
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

double to_double(std::string_view key, std::string_view v) {
  const auto d = text::parse_double(v);
  if (!d || !std::isfinite(*d)) invalid("set", std::string(key) + ": not a number: " + std::string(v));
  return *d;
}

long long to_int(std::string_view key, std::string_view v) {
  const auto i = text::parse_int(v);
  if (!i) invalid("set", std::string(key) + ": not an integer: " + std::string(v));
  return *i;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    invalid("set", std::string(key) + ": not an unsigned integer: " + std::string(v));
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  invalid("set", std::string(key) + ": expected true/false: " + std::string(v));
}

template <typename Field>
Key real(std::string name, Field field) {
  return {name, [=](RunConfig& c, std::string_view v) { field(c) = to_double(name, v); },
          [=](const RunConfig& c) { return text::format_double(field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
Key integer(std::string name, Field field) {
  return {name, [=](RunConfig& c, std::string_view v) { field(c) = static_cast<int>(to_int(name, v)); },
          [=](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
Key unsigned64(std::string name, Field field) {
  return {name, [=](RunConfig& c, std::string_view v) { field(c) = to_u64(name, v); },
          [=](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
Key boolean(std::string name, Field field) {
  return {name, [=](RunConfig& c, std::string_view v) { field(c) = to_bool(name, v); },
          [=](const RunConfig& c) { return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <typename Field>
Key string(std::string name, Field field) {
  return {name, [=](RunConfig& c, std::string_view v) { field(c) = std::string(v); },
          [=](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

#define FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(unsigned64("seed", FIELD(seed)));
    k.push_back(string("model", FIELD(model)));
    k.push_back(string("encoder", FIELD(encoder)));
    k.push_back(string("output_dir", FIELD(output_dir)));
    k.push_back(string("tscore_table", FIELD(tscore_table)));

    k.push_back(real("geometry.width_margin", FIELD(geometry.width_margin)));
    k.push_back(real("geometry.point_roi_scale", FIELD(geometry.point_roi_scale)));
    k.push_back(real("geometry.aspect_clavicle", FIELD(geometry.aspect_clavicle)));
    k.push_back(real("geometry.aspect_ribcage", FIELD(geometry.aspect_ribcage)));
    k.push_back(real("geometry.aspect_cervical", FIELD(geometry.aspect_cervical)));
    k.push_back(real("geometry.aspect_t12", FIELD(geometry.aspect_t12)));
    k.push_back(integer("geometry.out_height", FIELD(geometry.out_height)));
    k.push_back(integer("geometry.out_width", FIELD(geometry.out_width)));

    k.push_back(real("train.learning_rate", FIELD(train.learning_rate)));
    k.push_back(real("train.weight_decay", FIELD(train.weight_decay)));
    k.push_back(integer("train.batch_size", FIELD(train.batch_size)));
    k.push_back(integer("train.epochs", FIELD(train.epochs)));
    k.push_back(real("train.momentum", FIELD(train.momentum)));
    k.push_back(integer("train.eval_every", FIELD(train.eval_every)));
    k.push_back(integer("train.workers", FIELD(train.workers)));
    k.push_back(boolean("augment.enabled", FIELD(train.augment_enabled)));
    k.push_back(real("augment.scale_min", FIELD(train.augment.scale_min)));
    k.push_back(real("augment.scale_max", FIELD(train.augment.scale_max)));
    k.push_back(real("augment.rotate_min", FIELD(train.augment.rotate_min)));
    k.push_back(real("augment.rotate_max", FIELD(train.augment.rotate_max)));
    k.push_back(real("augment.translate_min", FIELD(train.augment.translate_min)));
    k.push_back(real("augment.translate_max", FIELD(train.augment.translate_max)));
    k.push_back(real("augment.hflip_prob", FIELD(train.augment.hflip_prob)));

    k.push_back(integer("phantom.image_size", FIELD(phantom.image_size)));
    k.push_back(integer("phantom.n_samples", FIELD(phantom.n_samples)));
    k.push_back(real("phantom.noise_level", FIELD(phantom.noise_level)));
    k.push_back(real("phantom.bmd_min", FIELD(phantom.bmd_min)));
    k.push_back(real("phantom.bmd_max", FIELD(phantom.bmd_max)));
    k.push_back(real("phantom.base_amplitude", FIELD(phantom.base_amplitude)));
    k.push_back(real("phantom.amplitude_gain", FIELD(phantom.amplitude_gain)));
    k.push_back(real("phantom.texture_cycles", FIELD(phantom.texture_cycles)));
    k.push_back(real("phantom.distractor_max", FIELD(phantom.distractor_max)));
    k.push_back(real("phantom.pixel_noise", FIELD(phantom.pixel_noise)));
    k.push_back(real("phantom.landmark_jitter", FIELD(phantom.landmark_jitter)));
    k.push_back(real("phantom.repeat_fraction", FIELD(phantom.repeat_fraction)));
    k.push_back(Key{"phantom.signal_split",
                    [](RunConfig& c, std::string_view v) {
                      const auto parts = text::split(v, ',');
                      if (parts.size() != kLocalRoiCount) {
                        invalid("set", "phantom.signal_split: expected 6 comma-separated fractions");
                      }
                      for (int i = 0; i < kLocalRoiCount; ++i) {
                        c.phantom.signal_split[i] = to_double("phantom.signal_split", text::trim(parts[i]));
                      }
                    },
                    [](const RunConfig& c) {
                      std::string out;
                      for (int i = 0; i < kLocalRoiCount; ++i) {
                        if (i) out += ',';
                        out += text::format_double(c.phantom.signal_split[i]);
                      }
                      return out;
                    }});
    return k;
  }();
  return table;
}

#undef FIELD

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) invalid("validate", "train.learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) invalid("validate", "train.weight_decay must be >= 0");
  if (batch_size <= 0) invalid("validate", "train.batch_size must be > 0");
  if (epochs < 0) invalid("validate", "train.epochs must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) invalid("validate", "train.momentum must be in [0, 1)");
  if (eval_every <= 0) invalid("validate", "train.eval_every must be > 0");
  if (workers <= 0) invalid("validate", "train.workers must be > 0");
  augment.validate();
}

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(*this, text::trim(value));
      return;
    }
  }
  invalid("set", "unknown key: " + std::string(key));
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  int line_no = 0;
  for (std::string_view line : text::split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) invalid("parse_config", "line " + std::to_string(line_no) + ": missing '='");
    try {
      base.set(text::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (Error& e) {
      throw e.with_context("line " + std::to_string(line_no));
    }
  }
  return base;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config.entries()) out += k + " = " + v + "\n";
  return out;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  try {
    return parse_config(text::read_file(path), std::move(base));
  } catch (Error& e) {
    throw e.with_context(path.string());
  }
}

void write_run_stamp(const RunConfig& config, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cli_config_io", "write_run_stamp", dir.string() + ": " + ec.message());
  text::write_file(dir / "config.txt", format_config(config));
  text::write_file(dir / "version.txt", std::string("multiroi_bmd ") + MULTIROI_VERSION + "\n");
}

}  // namespace multiroi
