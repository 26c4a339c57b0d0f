#include "terrain_energy/learned_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "terrain_energy/errors.hpp"
#include "terrain_energy/heightmap_io.hpp"
#include "terrain_energy/json_util.hpp"

namespace terrain_energy {

namespace {

constexpr char kMagic[8] = {'T', 'E', 'R', 'R', 'N', 'R', 'G', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("model file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

struct EpochBuffers {
  std::vector<float> inputs;
  std::vector<float> targets;
};

EpochBuffers flatten(const Dataset& data, double height_scale) {
  EpochBuffers buf;
  const std::size_t n = data.patches.front().n;
  buf.inputs.reserve(data.size() * n * n);
  for (const auto& p : data.patches) {
    const auto x = network_input(p, height_scale);
    buf.inputs.insert(buf.inputs.end(), x.begin(), x.end());
  }
  buf.targets.assign(data.targets.begin(), data.targets.end());
  return buf;
}

TrainReport run_descent(PatchRegressor& model, const Dataset& data, const TrainConfig& config,
                        bool conv_trainable) {
  config.validate();
  data.validate();
  if (data.patches.front().n != model.input_n()) {
    throw ValidationError("dataset patch size " + std::to_string(data.patches.front().n) +
                          " does not match model input " + std::to_string(model.input_n()));
  }
  const auto& net = model.network();
  const std::size_t n = model.input_n();
  const std::size_t per = n * n;
  const EpochBuffers buf = flatten(data, model.architecture().height_scale);

  auto params = model.mutable_parameters();
  std::vector<float> grad(params.size(), 0.0f);
  std::vector<float> velocity(params.size(), 0.0f);
  // Convolution parameters come first in the flat layout.
  const std::size_t first_trainable =
      conv_trainable || net.conv_layer_count() == 0
          ? 0
          : net.layers()[net.conv_layer_count()].weight_offset;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Engine eng(config.seed ^ 0x5DEECE66Dull);

  ConvNet<float>::Workspace ws;
  std::vector<float> batch_in;
  ConvNet<float>::Matrix d_out;
  TrainReport report;
  report.samples = data.size();
  const auto lr = static_cast<float>(config.learning_rate);
  const auto mom = static_cast<float>(config.momentum);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span(order), eng);
    double sse = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t bsz = std::min(config.batch_size, order.size() - start);
      batch_in.resize(bsz * per);
      for (std::size_t k = 0; k < bsz; ++k) {
        std::copy_n(buf.inputs.begin() + static_cast<std::ptrdiff_t>(order[start + k] * per), per,
                    batch_in.begin() + static_cast<std::ptrdiff_t>(k * per));
      }
      const auto& out = net.forward(params, batch_in, bsz, ws);
      d_out.resize(1, static_cast<Eigen::Index>(bsz));
      for (std::size_t k = 0; k < bsz; ++k) {
        const float err = out(0, static_cast<Eigen::Index>(k)) - buf.targets[order[start + k]];
        sse += static_cast<double>(err) * static_cast<double>(err);
        d_out(0, static_cast<Eigen::Index>(k)) = 2.0f * err / static_cast<float>(bsz);
      }
      std::fill(grad.begin(), grad.end(), 0.0f);
      net.backward(params, ws, d_out, grad, conv_trainable);
      for (std::size_t i = first_trainable; i < params.size(); ++i) {
        velocity[i] = mom * velocity[i] + grad[i];
        params[i] -= lr * velocity[i];
      }
    }
    const double mse = sse / static_cast<double>(order.size());
    if (!std::isfinite(mse)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) +
                            " (loss is not finite); lower the learning rate");
    }
    report.epoch_loss.push_back(mse);
  }
  return report;
}

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kHeadOnly: return "head_only";
    case TrainMode::kFromScratch: return "from_scratch";
    case TrainMode::kFineTune: return "fine_tune";
  }
  return "from_scratch";
}

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "head_only") return TrainMode::kHeadOnly;
  if (name == "from_scratch") return TrainMode::kFromScratch;
  if (name == "fine_tune") return TrainMode::kFineTune;
  throw ValidationError("unknown training mode '" + name + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be positive");
  }
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"epochs", epochs},          {"batch_size", batch_size},
          {"seed", seed},                   {"mode", to_string(mode)},   {"momentum", momentum}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("train config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "mode") c.mode = train_mode_from_string(value.get<std::string>());
      else if (key == "momentum") c.momentum = value.get<double>();
      else throw ValidationError("unknown train config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json architecture_to_json(const Architecture& arch) {
  return {{"input_n", arch.input_n},
          {"conv_channels", arch.conv_channels},
          {"head_widths", arch.head_widths},
          {"height_scale", arch.height_scale}};
}

Architecture architecture_from_json(const nlohmann::json& doc) {
  constexpr std::string_view ctx = "architecture";
  require_known_keys(doc, {"input_n", "conv_channels", "head_widths", "height_scale"}, ctx);
  Architecture arch;
  read_optional(doc, "input_n", arch.input_n, ctx);
  read_optional(doc, "conv_channels", arch.conv_channels, ctx);
  read_optional(doc, "head_widths", arch.head_widths, ctx);
  read_optional(doc, "height_scale", arch.height_scale, ctx);
  if (!(arch.height_scale > 0.0)) throw ValidationError("height_scale must be positive");
  try {
    layer_table(arch);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return arch;
}

void Dataset::validate() const {
  if (patches.empty()) throw ValidationError("dataset is empty");
  if (patches.size() != targets.size()) throw ValidationError("dataset patch/target count mismatch");
  const auto n = patches.front().n;
  const auto side = patches.front().side;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    // Segment chords are unit length only up to root-finding tolerance.
    if (patches[i].n != n || std::abs(patches[i].side - side) > 1e-6 * side) {
      throw ValidationError("dataset patches differ in size");
    }
    if (!std::isfinite(targets[i])) throw ValidationError("dataset target is not finite");
  }
}

Dataset build_dataset(const Heightmap& hm, std::span<const PathSegment> segments, std::size_t n) {
  Dataset data;
  for (const auto& seg : segments) {
    if (seg.curved) continue;
    if (!patch_fits(hm, seg.p.xy(), seg.heading, seg.length_h)) continue;
    data.patches.push_back(patch_for_segment(hm, seg, n));
    data.targets.push_back(seg.energy_scaled);
  }
  return data;
}

std::vector<float> network_input(const HeightPatch& patch, double height_scale) {
  std::vector<float> x(patch.values.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<float>(patch.values[i] / height_scale);
  }
  return x;
}

PatchRegressor::PatchRegressor(Architecture arch, std::uint64_t seed)
    : net_(std::move(arch)), params_(net_.initial_parameters(seed)) {
  if (!(net_.architecture().height_scale > 0.0)) {
    throw ValidationError("height scale must be positive");
  }
}

double PatchRegressor::predict(const HeightPatch& patch) const {
  return predict(std::span(&patch, 1)).front();
}

std::vector<double> PatchRegressor::predict(std::span<const HeightPatch> patches) const {
  const std::size_t n = input_n();
  std::vector<float> inputs;
  inputs.reserve(patches.size() * n * n);
  for (const auto& p : patches) {
    if (p.n != n) {
      throw ValidationError("patch size " + std::to_string(p.n) + " does not match model input " +
                            std::to_string(n));
    }
    const auto x = network_input(p, architecture().height_scale);
    inputs.insert(inputs.end(), x.begin(), x.end());
  }
  ConvNet<float>::Workspace ws;
  const auto& out = net_.forward(params_, inputs, patches.size(), ws);
  std::vector<double> result(patches.size());
  for (std::size_t k = 0; k < patches.size(); ++k) {
    result[k] = static_cast<double>(out(0, static_cast<Eigen::Index>(k)));
  }
  return result;
}

void PatchRegressor::zero_output_layer() {
  const auto& last = net_.layers().back();
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(last.weight_offset), params_.end(), 0.0f);
}

void PatchRegressor::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  const auto& arch = architecture();
  out.write(kMagic, sizeof kMagic);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(arch.input_n));
  put_u64(out, std::bit_cast<std::uint64_t>(arch.height_scale));
  put_u32(out, static_cast<std::uint32_t>(arch.conv_channels.size()));
  for (auto c : arch.conv_channels) put_u32(out, static_cast<std::uint32_t>(c));
  put_u32(out, static_cast<std::uint32_t>(arch.head_widths.size()));
  for (auto w : arch.head_widths) put_u32(out, static_cast<std::uint32_t>(w));
  // Per-layer shapes: kind, out, fan_in.
  for (const auto& l : net_.layers()) {
    put_u32(out, l.kind == LayerKind::kConv3x3 ? 0u : 1u);
    put_u32(out, static_cast<std::uint32_t>(l.out));
    put_u32(out, static_cast<std::uint32_t>(l.fan_in()));
  }
  put_u64(out, params_.size());
  for (float v : params_) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw IoError("failed writing " + file.string());
}

PatchRegressor PatchRegressor::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw IoError(file.string() + " is not a patch regressor model");
  }
  const auto version = get_u32(in);
  if (version != kFormatVersion) {
    throw IoError(file.string() + ": unsupported model format version " + std::to_string(version));
  }
  Architecture arch;
  arch.input_n = get_u32(in);
  arch.height_scale = std::bit_cast<double>(get_u64(in));
  arch.conv_channels.resize(get_u32(in));
  for (auto& c : arch.conv_channels) c = get_u32(in);
  arch.head_widths.resize(get_u32(in));
  for (auto& w : arch.head_widths) w = get_u32(in);
  PatchRegressor model(arch);
  for (const auto& l : model.net_.layers()) {
    const auto kind = get_u32(in);
    const auto out = get_u32(in);
    const auto fan_in = get_u32(in);
    if (kind != (l.kind == LayerKind::kConv3x3 ? 0u : 1u) || out != l.out || fan_in != l.fan_in()) {
      throw IoError(file.string() + ": layer table does not match the declared architecture");
    }
  }
  if (get_u64(in) != model.params_.size()) {
    throw IoError(file.string() + ": parameter count does not match the architecture");
  }
  for (auto& v : model.params_) v = std::bit_cast<float>(get_u32(in));
  return model;
}

nlohmann::json TrainReport::to_json() const {
  return {{"epoch_loss", epoch_loss},
          {"final_loss", epoch_loss.empty() ? 0.0 : epoch_loss.back()},
          {"samples", samples}};
}

TrainResult train(const Dataset& data, const TrainConfig& config, const Architecture& arch) {
  if (config.mode == TrainMode::kFineTune) {
    throw ValidationError("fine_tune mode needs an existing model; call fine_tune()");
  }
  data.validate();
  PatchRegressor model(arch, config.seed);
  auto report = run_descent(model, data, config, config.mode == TrainMode::kFromScratch);
  return {std::move(model), std::move(report)};
}

TrainResult fine_tune(PatchRegressor model, const Dataset& data, const TrainConfig& config) {
  auto report = run_descent(model, data, config, true);
  return {std::move(model), std::move(report)};
}

std::vector<double> mean_shift_calibrate(std::span<const double> predictions, double target_mean) {
  if (predictions.empty()) throw ValidationError("mean-shift calibration needs predictions");
  if (!std::isfinite(target_mean)) throw ValidationError("target mean must be finite");
  const double mean = std::accumulate(predictions.begin(), predictions.end(), 0.0) /
                      static_cast<double>(predictions.size());
  const double shift = target_mean - mean;
  std::vector<double> out(predictions.size());
  std::transform(predictions.begin(), predictions.end(), out.begin(),
                 [shift](double p) { return p + shift; });
  return out;
}

void write_model_sidecar(const std::filesystem::path& model_file, const TrainConfig& config,
                         const Architecture& arch, const TrainReport& report) {
  nlohmann::json doc = {{"train_config", config.to_json()},
                        {"architecture", architecture_to_json(arch)},
                        {"metrics", report.to_json()}};
  auto sidecar = model_file;
  sidecar += ".json";
  write_json(sidecar, doc);
}

}  // namespace terrain_energy
