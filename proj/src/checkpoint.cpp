#include "multiroi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "multiroi/errors.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr char kMagic[8] = {'M', 'R', 'O', 'I', 'W', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little, "weights.bin assumes a little-endian host");

[[noreturn]] void mismatch(std::string_view op, std::string detail) {
  throw Error(ErrorCode::CheckpointMismatch, "network", std::string(op), std::move(detail));
}

json geometry_json(const GeometryConfig& g) {
  return {{"width_margin", g.width_margin},       {"point_roi_scale", g.point_roi_scale},
          {"aspect_clavicle", g.aspect_clavicle}, {"aspect_ribcage", g.aspect_ribcage},
          {"aspect_cervical", g.aspect_cervical}, {"aspect_t12", g.aspect_t12},
          {"out_height", g.out_height},           {"out_width", g.out_width}};
}

GeometryConfig geometry_from_json(const json& j) {
  GeometryConfig g;
  g.width_margin = j.at("width_margin").get<double>();
  g.point_roi_scale = j.at("point_roi_scale").get<double>();
  g.aspect_clavicle = j.at("aspect_clavicle").get<double>();
  g.aspect_ribcage = j.at("aspect_ribcage").get<double>();
  g.aspect_cervical = j.at("aspect_cervical").get<double>();
  g.aspect_t12 = j.at("aspect_t12").get<double>();
  g.out_height = j.at("out_height").get<int>();
  g.out_width = j.at("out_width").get<int>();
  return g;
}

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}
  template <typename T>
  T get() {
    T v;
    take(&v, sizeof v);
    return v;
  }
  void take(void* dst, std::size_t n) {
    if (n > data_.size() - pos_) mismatch("load_checkpoint", "weights.bin truncated");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

std::string encode_weights(const RoiModel& model) {
  std::string out(kMagic, sizeof kMagic);
  const auto params = model.parameters();
  put(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put(out, static_cast<std::uint64_t>(p->value.size()));
    out.append(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(double));
  }
  return out;
}

void decode_weights(RoiModel& model, const std::string& data) {
  Reader r(data);
  char magic[sizeof kMagic];
  r.take(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) mismatch("load_checkpoint", "bad weights.bin magic");
  const auto params = model.parameters();
  const auto count = r.get<std::uint32_t>();
  if (count != params.size()) {
    mismatch("load_checkpoint", "parameter count " + std::to_string(count) + " != " + std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    std::string name(r.get<std::uint32_t>(), '\0');
    r.take(name.data(), name.size());
    if (name != p->name) mismatch("load_checkpoint", "expected parameter " + p->name + ", found " + name);
    const auto size = r.get<std::uint64_t>();
    if (size != p->value.size()) mismatch("load_checkpoint", "size mismatch for " + p->name);
    r.take(p->value.data(), size * sizeof(double));
  }
  if (!r.done()) mismatch("load_checkpoint", "trailing bytes in weights.bin");
}

json spec_json(const ModelSpec& spec) {
  json inputs = json::array();
  for (RoiKind k : spec.inputs) inputs.push_back(std::string(roi_name(k)));
  return {{"name", spec.name}, {"encoder", spec.encoder}, {"inputs", inputs}, {"multi_head", spec.multi_head}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.encoder = j.at("encoder").get<std::string>();
  spec.multi_head = j.at("multi_head").get<bool>();
  for (const auto& v : j.at("inputs")) {
    const auto kind = roi_from_name(v.get<std::string>());
    if (!kind) mismatch("load_checkpoint", "unknown ROI " + v.get<std::string>());
    spec.inputs.push_back(*kind);
  }
  return spec;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    mismatch("load_checkpoint", path.string() + ": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const RoiModel& model, const CheckpointMeta& meta, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "network", "save_checkpoint", dir.string() + ": " + ec.message());
  text::write_file(dir / "weights.bin", encode_weights(model));
  text::write_file(dir / "model.json", spec_json(model.spec()).dump(2) + "\n");
  const json m = {{"format_version", meta.format_version},
                  {"seed", meta.seed},
                  {"epoch", meta.epoch},
                  {"geometry_hash", meta.geometry.hash()},
                  {"geometry", geometry_json(meta.geometry)},
                  {"version", meta.version}};
  text::write_file(dir / "metadata.json", m.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  LoadedCheckpoint out;
  const json m = read_json(dir / "metadata.json");
  try {
    out.meta.format_version = m.at("format_version").get<int>();
    if (out.meta.format_version != kCheckpointFormat) {
      mismatch("load_checkpoint", "unsupported format_version " + std::to_string(out.meta.format_version));
    }
    out.meta.seed = m.at("seed").get<std::uint64_t>();
    out.meta.epoch = m.at("epoch").get<int>();
    out.meta.geometry = geometry_from_json(m.at("geometry"));
    out.meta.version = m.at("version").get<std::string>();
    out.geometry_hash = m.at("geometry_hash").get<std::string>();
  } catch (const json::exception& e) {
    mismatch("load_checkpoint", "metadata.json: " + std::string(e.what()));
  }
  ModelSpec spec;
  try {
    spec = spec_from_json(read_json(dir / "model.json"));
  } catch (const json::exception& e) {
    mismatch("load_checkpoint", "model.json: " + std::string(e.what()));
  }
  out.model = std::make_unique<RoiModel>(spec, out.meta.seed);
  decode_weights(*out.model, text::read_file(dir / "weights.bin"));
  return out;
}

void load_weights(RoiModel& model, const fs::path& dir) { decode_weights(model, text::read_file(dir / "weights.bin")); }

}  // namespace multiroi
