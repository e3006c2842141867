#include "multiroi/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "multiroi/augment.hpp"
#include "multiroi/checkpoint.hpp"
#include "multiroi/errors.hpp"
#include "multiroi/hash.hpp"
#include "multiroi/text.hpp"

namespace multiroi {

namespace fs = std::filesystem;

namespace {

constexpr char kCacheMagic[4] = {'M', 'R', 'C', 'C'};

[[noreturn]] void load_error(const fs::path& path, std::string_view why) {
  throw Error(ErrorCode::DataLoadError, "training_engine", "load", path.string() + ": " + std::string(why));
}

std::string read_bytes(const fs::path& path) {
  try {
    return text::read_file(path);
  } catch (const Error& e) {
    load_error(path, e.detail());
  }
}

std::string cache_key(std::string_view image_bytes, std::string_view landmark_bytes, const GeometryConfig& geometry,
                      std::span<const RoiKind> kinds) {
  Fnv1a h;
  h.update(image_bytes).update("|").update(landmark_bytes).update("|").update(geometry.hash()).update("|");
  for (RoiKind k : kinds) h.update(roi_name(k)).update(",");
  return h.hex();
}

std::string encode_crops(const RoiCropSet& set, std::span<const RoiKind> kinds) {
  std::string out(kCacheMagic, sizeof kCacheMagic);
  auto put = [&](std::int32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put(static_cast<std::int32_t>(kinds.size()));
  for (RoiKind k : kinds) {
    const Image& img = set[k];
    put(static_cast<std::int32_t>(k));
    put(img.width);
    put(img.height);
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size() * sizeof(float));
  }
  return out;
}

std::optional<RoiCropSet> decode_crops(const std::string& data, std::span<const RoiKind> kinds) {
  std::size_t pos = 0;
  auto take = [&](void* dst, std::size_t n) {
    if (n > data.size() - pos) return false;
    std::memcpy(dst, data.data() + pos, n);
    pos += n;
    return true;
  };
  char magic[4];
  std::int32_t count = 0;
  if (!take(magic, 4) || std::memcmp(magic, kCacheMagic, 4) != 0) return std::nullopt;
  if (!take(&count, 4) || count != static_cast<std::int32_t>(kinds.size())) return std::nullopt;
  RoiCropSet set;
  for (RoiKind k : kinds) {
    std::int32_t kind = 0, w = 0, h = 0;
    if (!take(&kind, 4) || !take(&w, 4) || !take(&h, 4)) return std::nullopt;
    if (kind != static_cast<std::int32_t>(k) || w <= 0 || h <= 0) return std::nullopt;
    Image img(w, h);
    if (!take(img.pixels.data(), img.pixels.size() * sizeof(float))) return std::nullopt;
    set[k] = std::move(img);
  }
  if (pos != data.size()) return std::nullopt;
  return set;
}

std::optional<fs::path> cache_dir() {
  const char* env = std::getenv("MULTIROI_BMD_CACHE");
  if (env == nullptr || *env == '\0') return std::nullopt;
  return fs::path(env);
}

struct Sample {
  const ManifestRow* row;
  BmdVector target;
};

std::vector<Sample> labelled_rows(const DatasetManifest& manifest, Split split) {
  std::vector<Sample> out;
  for (const ManifestRow* r : manifest.rows_in(split)) {
    if (!r->has_all_gt()) continue;
    out.push_back({r, {*r->gt[0], *r->gt[1], *r->gt[2], *r->gt[3]}});
  }
  return out;
}

// Pre-extracted crops when the supplied store fits, otherwise loaded here.
class CropSource {
 public:
  CropSource(const DatasetManifest& manifest, const GeometryConfig& geometry, std::span<const RoiKind> kinds,
             const CropStore* store)
      : manifest_(manifest), geometry_(geometry), kinds_(kinds.begin(), kinds.end()) {
    if (store != nullptr && store->covers(kinds) && store->geometry().hash() == geometry.hash()) store_ = store;
  }

  void preload(std::span<const ManifestRow* const> rows, int workers) {
    std::vector<const ManifestRow*> missing;
    for (const ManifestRow* r : rows) {
      if (store_ == nullptr || store_->find(r->scan_id) == nullptr) missing.push_back(r);
    }
    if (!missing.empty()) local_ = CropStore::load(manifest_, missing, geometry_, kinds_, workers);
  }

  RoiCropSet get(const ManifestRow& row) const {
    if (store_ != nullptr) {
      if (const RoiCropSet* s = store_->find(row.scan_id)) return *s;
    }
    if (const RoiCropSet* s = local_.find(row.scan_id)) return *s;
    return load_row_crops(manifest_, row, geometry_, kinds_);
  }

 private:
  const DatasetManifest& manifest_;
  GeometryConfig geometry_;
  std::vector<RoiKind> kinds_;
  const CropStore* store_ = nullptr;
  CropStore local_;
};

RoiCropSet augmented_crops(const DatasetManifest& manifest, const ManifestRow& row, const GeometryConfig& geometry,
                           std::span<const RoiKind> kinds, const AugmentConfig& cfg, std::mt19937_64& rng) {
  const fs::path image_path = manifest.resolve(row.image_path);
  const fs::path lm_path = manifest.resolve(row.landmark_path);
  Image image;
  LandmarkSet landmarks;
  try {
    image = read_png(image_path);
  } catch (const Error& e) {
    load_error(image_path, e.detail());
  }
  try {
    landmarks = parse_landmark_file(read_bytes(lm_path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DataLoadError) throw;
    load_error(lm_path, e.what());
  }
  const auto [aug_image, aug_landmarks] = augment(image, landmarks, cfg, rng);
  return extract_rois(aug_image, aug_landmarks, geometry, kinds);
}

double mean_loss(const RoiModel& model, const CropSource& source, std::span<const Sample> samples, int batch_size) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<RoiCropSet> batch;
    std::vector<BmdVector> targets;
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(source.get(*samples[i].row));
      targets.push_back(samples[i].target);
    }
    const auto pred = model.infer(stack_rois(batch, model.spec()));
    total += multihead_loss(pred, targets) * static_cast<double>(end - start);
  }
  return total / static_cast<double>(samples.size());
}

void sgd_step(RoiModel& model, const TrainConfig& cfg, std::vector<std::vector<double>>& velocity) {
  const auto params = model.parameters();
  if (cfg.momentum > 0.0 && velocity.size() != params.size()) {
    velocity.clear();
    for (const Parameter* p : params) velocity.emplace_back(p->value.size(), 0.0);
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    const std::size_t n = p.value.size();
    if (cfg.momentum > 0.0) {
      double* v = velocity[k].data();
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = cfg.momentum * v[i] + (p.grad[i] + cfg.weight_decay * p.value[i]);
        p.value[i] -= cfg.learning_rate * v[i];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) p.value[i] -= cfg.learning_rate * (p.grad[i] + cfg.weight_decay * p.value[i]);
    }
  }
}

}  // namespace

RoiCropSet extract_rois(const Image& image, const LandmarkSet& landmarks, const GeometryConfig& geometry,
                        std::span<const RoiKind> kinds) {
  RoiCropSet set;
  for (RoiKind k : kinds) {
    const OrientedBox box = k == RoiKind::ChestGlobal ? full_image_box() : build_roi_geometry(landmarks, k, geometry);
    try {
      set[k] = crop_and_normalize(image, box, geometry.out_height, geometry.out_width);
    } catch (const Error& e) {
      throw e.with_context(roi_name(k));
    }
  }
  return set;
}

RoiCropSet load_row_crops(const DatasetManifest& manifest, const ManifestRow& row, const GeometryConfig& geometry,
                          std::span<const RoiKind> kinds) {
  const fs::path image_path = manifest.resolve(row.image_path);
  const fs::path lm_path = manifest.resolve(row.landmark_path);
  const auto cache = cache_dir();
  std::optional<fs::path> cache_file;
  const std::string lm_bytes = read_bytes(lm_path);
  if (cache) {
    const std::string image_bytes = read_bytes(image_path);
    cache_file = *cache / (cache_key(image_bytes, lm_bytes, geometry, kinds) + ".crops");
    std::error_code ec;
    if (fs::exists(*cache_file, ec)) {
      try {
        if (auto hit = decode_crops(text::read_file(*cache_file), kinds)) return std::move(*hit);
      } catch (const Error&) {
        // unreadable cache entry: fall through and recompute
      }
    }
  }

  Image image;
  try {
    image = read_png(image_path);
  } catch (const Error& e) {
    load_error(image_path, e.detail());
  }
  LandmarkSet landmarks;
  try {
    landmarks = parse_landmark_file(lm_bytes);
  } catch (const Error& e) {
    load_error(lm_path, e.what());
  }
  RoiCropSet set;
  try {
    set = extract_rois(image, landmarks, geometry, kinds);
  } catch (const Error& e) {
    throw e.with_context(row.scan_id);
  }

  if (cache_file) {
    std::error_code ec;
    fs::create_directories(cache_file->parent_path(), ec);
    // Write then rename so concurrent readers never see a partial entry.
    const fs::path tmp = cache_file->string() + ".tmp" + std::to_string(std::hash<std::string>{}(row.scan_id));
    try {
      text::write_file(tmp, encode_crops(set, kinds));
      fs::rename(tmp, *cache_file, ec);
    } catch (const Error&) {
      // cache is best effort
    }
    if (ec) fs::remove(tmp, ec);
  }
  return set;
}

CropStore CropStore::load(const DatasetManifest& manifest, std::span<const ManifestRow* const> rows,
                          const GeometryConfig& geometry, std::span<const RoiKind> kinds, int workers) {
  CropStore store;
  store.geometry_ = geometry;
  store.kinds_.assign(kinds.begin(), kinds.end());
  std::vector<RoiCropSet> sets(rows.size());
  std::vector<std::optional<Error>> errors(rows.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      sets[i] = load_row_crops(manifest, *rows[i], geometry, kinds);
    } catch (const Error& e) {
      errors[i] = e;
    }
  }
  for (auto& e : errors) {
    if (e) throw *e;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) store.crops_.emplace(rows[i]->scan_id, std::move(sets[i]));
  return store;
}

const RoiCropSet* CropStore::find(const std::string& scan_id) const {
  const auto it = crops_.find(scan_id);
  return it == crops_.end() ? nullptr : &it->second;
}

bool CropStore::covers(std::span<const RoiKind> kinds) const {
  return std::all_of(kinds.begin(), kinds.end(),
                     [&](RoiKind k) { return std::find(kinds_.begin(), kinds_.end(), k) != kinds_.end(); });
}

BmdVector mean_target(const DatasetManifest& manifest, Split split) {
  BmdVector sum{};
  const auto rows = labelled_rows(manifest, split);
  if (rows.empty()) throw Error(ErrorCode::EmptyManifest, "training_engine", "mean_target", "no labelled rows");
  for (const auto& s : rows) {
    for (int k = 0; k < kVertebrae; ++k) sum[k] += s.target[k];
  }
  for (double& v : sum) v /= static_cast<double>(rows.size());
  return sum;
}

std::string format_epoch_record(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["val_loss"] = r.val_loss ? nlohmann::ordered_json(*r.val_loss) : nlohmann::ordered_json(nullptr);
  j["lr"] = r.lr;
  j["wallclock"] = r.wallclock;
  return j.dump();
}

TrainResult train(const DatasetManifest& manifest, RoiModel& model, const TrainConfig& cfg,
                  const GeometryConfig& geometry, const fs::path& out_dir, const CropStore* store) {
  cfg.validate();
  const ModelSpec& spec = model.spec();
  const std::vector<Sample> train_rows = labelled_rows(manifest, Split::Train);
  const std::vector<Sample> val_rows = labelled_rows(manifest, Split::Val);
  if (train_rows.empty() && cfg.epochs > 0) {
    throw Error(ErrorCode::EmptyManifest, "training_engine", "train", "no labelled training rows");
  }
  const bool augmenting = cfg.augment_enabled && !cfg.augment.is_identity();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "training_engine", "train", out_dir.string() + ": " + ec.message());

  TrainResult result;
  result.best_checkpoint = out_dir / "checkpoint_best";
  result.final_checkpoint = out_dir / "checkpoint_final";
  result.log_path = out_dir / "train_log.jsonl";
  result.initial_train_loss = std::numeric_limits<double>::quiet_NaN();
  std::ofstream log(result.log_path, std::ios::trunc);
  if (!log) throw Error(ErrorCode::IoError, "training_engine", "train", result.log_path.string());

  CheckpointMeta meta;
  meta.seed = cfg.seed;
  meta.geometry = geometry;

  if (cfg.epochs == 0) {
    save_checkpoint(model, meta, result.final_checkpoint);
    save_checkpoint(model, meta, result.best_checkpoint);
    return result;
  }

  CropSource source(manifest, geometry, spec.inputs, store);
  {
    std::vector<const ManifestRow*> rows;
    for (const auto& s : val_rows) rows.push_back(s.row);
    if (!augmenting) {
      for (const auto& s : train_rows) rows.push_back(s.row);
    }
    source.preload(rows, cfg.workers);
  }
  result.initial_train_loss = mean_loss(model, source, train_rows, cfg.batch_size);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<double>> velocity;
  std::optional<double> best_val;
  std::vector<std::size_t> order(train_rows.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    int step = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto count = static_cast<std::ptrdiff_t>(end - start);
      std::vector<RoiCropSet> batch(count);
      std::vector<BmdVector> targets(count);
      std::vector<std::optional<Error>> errors(count);
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers) if (augmenting)
      for (std::ptrdiff_t b = 0; b < count; ++b) {
        const std::size_t idx = order[start + b];
        const Sample& s = train_rows[idx];
        targets[b] = s.target;
        try {
          if (augmenting) {
            std::mt19937_64 rng(mix_seed(mix_seed(cfg.seed ^ 0xa5a5a5a5ULL, epoch), idx));
            batch[b] = augmented_crops(manifest, *s.row, geometry, spec.inputs, cfg.augment, rng);
          } else {
            batch[b] = source.get(*s.row);
          }
        } catch (const Error& e) {
          errors[b] = e;
        }
      }
      for (auto& e : errors) {
        if (e) throw *e;
      }

      model.zero_grad();
      const std::string where = "epoch " + std::to_string(epoch) + " step " + std::to_string(step);
      try {
        const auto pred = model.forward(stack_rois(batch, spec));
        loss_sum += model.backward(pred, targets) * static_cast<double>(count);
      } catch (const Error& e) {
        throw e.with_context(where);
      }
      sgd_step(model, cfg, velocity);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.lr = cfg.learning_rate;
    if (!val_rows.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      rec.val_loss = mean_loss(model, source, val_rows, cfg.batch_size);
      if (!std::isfinite(*rec.val_loss)) {
        throw Error(ErrorCode::NonFiniteActivation, "training_engine", "train",
                    "non-finite validation loss at epoch " + std::to_string(epoch));
      }
    }
    rec.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << format_epoch_record(rec) << '\n' << std::flush;
    result.log.push_back(rec);

    if (rec.val_loss && (!best_val || *rec.val_loss < *best_val)) {
      best_val = rec.val_loss;
      result.best_epoch = epoch;
      meta.epoch = epoch;
      save_checkpoint(model, meta, result.best_checkpoint);
    }
  }

  meta.epoch = cfg.epochs;
  save_checkpoint(model, meta, result.final_checkpoint);
  if (!best_val) {
    result.best_epoch = cfg.epochs;
    save_checkpoint(model, meta, result.best_checkpoint);
  }
  return result;
}

PredictionTable predict(const RoiModel& model, const DatasetManifest& manifest, Split split,
                        const GeometryConfig& geometry, const CropStore* store, int batch_size) {
  if (batch_size <= 0) throw Error(ErrorCode::InvalidConfig, "training_engine", "predict", "batch_size must be > 0");
  const auto rows = manifest.rows_in(split);
  CropSource source(manifest, geometry, model.spec().inputs, store);
  PredictionTable table;
  for (std::size_t start = 0; start < rows.size(); start += batch_size) {
    const std::size_t end = std::min(rows.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<RoiCropSet> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(source.get(*rows[i]));
    const auto bmd = model.predict_bmd(batch);
    for (std::size_t i = start; i < end; ++i) {
      table.rows.push_back({rows[i]->scan_id, rows[i]->patient_id, bmd[i - start]});
    }
  }
  return table;
}

PredictionTable predict_checkpoint(const fs::path& checkpoint, const DatasetManifest& manifest, Split split,
                                   const std::optional<GeometryConfig>& geometry, bool strict,
                                   const CropStore* store) {
  LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  GeometryConfig use = ckpt.meta.geometry;
  if (ckpt.geometry_hash != use.hash()) {
    throw Error(ErrorCode::CheckpointMismatch, "training_engine", "predict",
                checkpoint.string() + ": stored geometry does not match its hash");
  }
  if (geometry && geometry->hash() != ckpt.geometry_hash) {
    const std::string msg = checkpoint.string() + ": geometry hash " + geometry->hash() + " differs from training-time " +
                            ckpt.geometry_hash;
    if (strict) throw Error(ErrorCode::CheckpointMismatch, "training_engine", "predict", msg);
    std::cerr << "warning: " << msg << '\n';
    use = *geometry;
  }
  return predict(*ckpt.model, manifest, split, use, store);
}

}  // namespace multiroi
