#include "en2/store.hpp"

#include "en2/en2t.hpp"
#include "en2/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <sstream>

namespace en2 {

std::string format_number(double v)
{
  if (std::isnan(v)) { return "nan"; }
  if (std::isinf(v)) { return v > 0 ? "inf" : "-inf"; }
  return fmt::format("{}", v);
}

namespace {

std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) { return {}; }
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Index to_index(std::string const &key, std::string const &v)
{
  Index out = 0;
  auto const [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) { throw ConfigError(key + ": expected a count, got '" + v + "'"); }
  return out;
}

std::uint64_t to_u64(std::string const &key, std::string const &v)
{
  std::uint64_t out = 0;
  auto const [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) { throw ConfigError(key + ": expected an integer, got '" + v + "'"); }
  return out;
}

double to_double(std::string const &key, std::string const &v)
{
  if (v == "nan") { return std::numeric_limits<double>::quiet_NaN(); }
  if (v == "inf") { return std::numeric_limits<double>::infinity(); }
  try {
    std::size_t used = 0;
    double const d = std::stod(v, &used);
    if (used == v.size()) { return d; }
  } catch (std::exception const &) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::string const &require(KeyValues const &kv, std::string const &key)
{
  auto it = kv.find(key);
  if (it == kv.end()) { throw FormatError("missing key '" + key + "'"); }
  return it->second;
}

} // namespace

KeyValues parse_key_values(std::string const &text)
{
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    auto const t = trim(line);
    if (t.empty() || t[0] == '#') { continue; }
    auto const eq = t.find('=');
    if (eq == std::string::npos) { throw ConfigError("line " + std::to_string(lineno) + ": expected key=value"); }
    auto key = trim(t.substr(0, eq));
    auto value = trim(t.substr(eq + 1));
    if (key.empty()) { throw ConfigError("line " + std::to_string(lineno) + ": empty key"); }
    if (!kv.emplace(key, value).second) { throw ConfigError("duplicate key '" + key + "'"); }
  }
  return kv;
}

KeyValues read_key_values(std::filesystem::path const &path)
{
  auto const bytes = read_file(path);
  return parse_key_values(std::string(bytes.begin(), bytes.end()));
}

std::string format_key_values(KeyValues const &kv)
{
  std::string out;
  for (auto const &[k, v] : kv) {
    out += k + "=" + v + "\n";
  }
  return out;
}

void apply_config(KeyValues const &kv, NetworkConfig &net, TrainConfig &train)
{
  for (auto const &[key, v] : kv) {
    if (key == "height") {
      net.height = to_index(key, v);
    } else if (key == "width") {
      net.width = to_index(key, v);
    } else if (key == "P") {
      net.e_blocks = to_index(key, v);
    } else if (key == "Q") {
      net.en2_layers = to_index(key, v);
    } else if (key == "M") {
      net.f_blocks = to_index(key, v);
    } else if (key == "R") {
      net.fmus_per_block = to_index(key, v);
    } else if (key == "V") {
      net.growth = to_index(key, v);
    } else if (key == "en2_mode") {
      net.en2_mode = parse_en2_mode(v);
    } else if (key == "kspace_kernel") {
      net.kspace_kernel = parse_kspace_kernel(v, net.square_size);
    } else if (key == "kspace_channels") {
      net.kspace_channels = to_index(key, v);
    } else if (key == "alpha") {
      net.alpha = to_double(key, v);
    } else if (key == "precision") {
      net.precision = static_cast<int>(to_index(key, v));
    } else if (key == "init") {
      if (v == "glorot") {
        net.init = Init::Glorot;
      } else if (v == "zero") {
        net.init = Init::Zero;
      } else {
        throw ConfigError("init: expected glorot or zero, got '" + v + "'");
      }
    } else if (key == "epochs") {
      train.epochs = to_index(key, v);
    } else if (key == "batch_size") {
      train.batch_size = to_index(key, v);
    } else if (key == "lr_start") {
      train.lr_start = to_double(key, v);
    } else if (key == "lr_end") {
      train.lr_end = to_double(key, v);
    } else if (key == "seed") {
      train.seed = to_u64(key, v);
    } else if (key == "noise_sigma") {
      train.noise_sigma = to_double(key, v);
    } else {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
}

KeyValues config_to_key_values(NetworkConfig const &net)
{
  return {
    {"height", std::to_string(net.height)},
    {"width", std::to_string(net.width)},
    {"P", std::to_string(net.e_blocks)},
    {"Q", std::to_string(net.en2_layers)},
    {"M", std::to_string(net.f_blocks)},
    {"R", std::to_string(net.fmus_per_block)},
    {"V", std::to_string(net.growth)},
    {"en2_mode", to_string(net.en2_mode)},
    {"kspace_kernel", to_string(net.kspace_kernel, net.square_size)},
    {"kspace_channels", std::to_string(net.kspace_channels)},
    {"alpha", format_number(net.alpha)},
    {"precision", std::to_string(net.precision)},
    {"init", net.init == Init::Glorot ? "glorot" : "zero"},
  };
}

KeyValues config_to_key_values(TrainConfig const &train)
{
  return {
    {"epochs", std::to_string(train.epochs)},
    {"batch_size", std::to_string(train.batch_size)},
    {"lr_start", format_number(train.lr_start)},
    {"lr_end", format_number(train.lr_end)},
    {"seed", std::to_string(train.seed)},
    {"noise_sigma", format_number(train.noise_sigma)},
  };
}

void save_checkpoint(std::filesystem::path const &path, NetworkParams const &params, Index steps,
                     std::vector<EpochRecord> const &history)
{
  auto const values = params.flatten();
  Tensor t;
  t.dtype = params.config.precision == 32 ? DType::F32 : DType::F64;
  t.is_complex = true;
  t.dims = {static_cast<std::uint32_t>(values.size())};
  t.values.reserve(2 * values.size());
  for (auto const &v : values) {
    t.values.push_back(v.real());
    t.values.push_back(v.imag());
  }
  write_en2t(t, path);

  auto kv = config_to_key_values(params.config);
  kv["format"] = "en2-checkpoint";
  kv["version"] = "1";
  kv["steps"] = std::to_string(steps);
  kv["parameter_count"] = std::to_string(values.size());
  kv["epochs_recorded"] = std::to_string(history.size());
  for (auto const &h : history) {
    kv[fmt::format("epoch.{:05}", h.epoch)] = fmt::format("{} {} {}", format_number(h.learning_rate),
                                                          format_number(h.train_loss), format_number(h.val_loss));
  }
  auto const text = format_key_values(kv);
  write_file(path.string() + ".manifest", std::vector<std::uint8_t>(text.begin(), text.end()));
}

Checkpoint load_checkpoint(std::filesystem::path const &path)
{
  auto kv = read_key_values(path.string() + ".manifest");
  if (require(kv, "format") != "en2-checkpoint") { throw FormatError("not a checkpoint manifest"); }
  Checkpoint ck;
  ck.steps = to_index("steps", require(kv, "steps"));
  auto const count = to_index("parameter_count", require(kv, "parameter_count"));
  KeyValues config;
  for (auto const &[k, v] : kv) {
    if (k.rfind("epoch.", 0) == 0) {
      std::istringstream in(v);
      std::string lr, tr, va;
      in >> lr >> tr >> va;
      EpochRecord r;
      r.epoch = to_index(k, k.substr(6));
      r.learning_rate = to_double(k, lr);
      r.train_loss = to_double(k, tr);
      r.val_loss = to_double(k, va);
      ck.history.push_back(r);
    } else if (k != "format" && k != "version" && k != "steps" && k != "parameter_count" && k != "epochs_recorded") {
      config[k] = v;
    }
  }
  NetworkConfig net;
  TrainConfig unused;
  apply_config(config, net, unused);
  ck.params = build_network(net, 0);

  auto const t = read_en2t(path);
  if (!t.is_complex || t.dims.size() != 1 || t.dims[0] != count) {
    throw FormatError("checkpoint tensor does not hold " + std::to_string(count) + " complex values");
  }
  std::vector<Cx> values(count);
  for (Index i = 0; i < count; i++) {
    values[i] = {t.values[2 * i], t.values[2 * i + 1]};
  }
  try {
    ck.params.assign(values);
  } catch (ContractViolation const &e) {
    throw FormatError(std::string("checkpoint does not match its configuration: ") + e.what());
  }
  return ck;
}

std::string loss_history_csv(std::vector<EpochRecord> const &history)
{
  std::string out = "epoch,lr,train_loss,val_loss\n";
  for (auto const &h : history) {
    out += fmt::format("{},{},{},{}\n", h.epoch, format_number(h.learning_rate), format_number(h.train_loss),
                       format_number(h.val_loss));
  }
  return out;
}

std::string sample_stem(Index id) { return fmt::format("sample_{:04}", id); }

void write_dataset(std::filesystem::path const &dir, std::uint64_t seed, DatasetConfig const &cfg,
                   std::vector<DatasetSample> const &samples)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) { throw IoError("cannot create " + dir.string() + ": " + ec.message()); }
  std::string manifest = "# en2 synthetic dataset\n";
  manifest += fmt::format("count={}\nheight={}\nwidth={}\nseed={}\naf={}\ncenter_fraction={}\nnoise_sigma={}\n",
                          samples.size(), cfg.height, cfg.width, seed, format_number(cfg.af),
                          format_number(cfg.center_fraction), format_number(cfg.noise_sigma));
  manifest += fmt::format("min_defects={}\nmax_defects={}\ndefect_intensity={}\n", cfg.phantom.min_defects,
                          cfg.phantom.max_defects, format_number(cfg.phantom.defect_intensity));
  for (auto const &s : samples) {
    auto const stem = sample_stem(s.id);
    manifest += fmt::format("{}={} {} {}\n", stem, s.phantom_seed, s.mask_seed, format_number(s.mask.af_actual()));
    write_en2t(s.phantom.image, dir / (stem + "_image.en2t"));
    write_en2t(s.y_u, dir / (stem + "_kspace.en2t"));
    write_en2t(s.mask.expand(), dir / (stem + "_mask.en2t"));
    write_en2t(s.phantom.lung_mask, dir / (stem + "_lung.en2t"));
    write_en2t(s.phantom.thoracic_mask, dir / (stem + "_thoracic.en2t"));
    write_en2t(s.phantom.defect_mask, dir / (stem + "_defect.en2t"));
  }
  write_file(dir / "manifest.txt", std::vector<std::uint8_t>(manifest.begin(), manifest.end()));
}

StoredDataset read_dataset(std::filesystem::path const &dir)
{
  auto const kv = read_key_values(dir / "manifest.txt");
  StoredDataset ds;
  auto const count = to_index("count", require(kv, "count"));
  ds.seed = to_u64("seed", require(kv, "seed"));
  ds.config.height = to_index("height", require(kv, "height"));
  ds.config.width = to_index("width", require(kv, "width"));
  ds.config.af = to_double("af", require(kv, "af"));
  ds.config.center_fraction = to_double("center_fraction", require(kv, "center_fraction"));
  ds.config.noise_sigma = to_double("noise_sigma", require(kv, "noise_sigma"));
  for (Index i = 0; i < count; i++) {
    auto const stem = sample_stem(i);
    std::istringstream in(require(kv, stem));
    StoredSample s;
    s.id = i;
    in >> s.phantom_seed >> s.mask_seed;
    s.image = read_complex_grid(dir / (stem + "_image.en2t"));
    s.y_u = read_complex_grid(dir / (stem + "_kspace.en2t"));
    s.mask = SamplingMask::from_grid(read_binary_grid(dir / (stem + "_mask.en2t")));
    s.mask.seed = s.mask_seed;
    s.lung_mask = read_binary_grid(dir / (stem + "_lung.en2t"));
    s.thoracic_mask = read_binary_grid(dir / (stem + "_thoracic.en2t"));
    s.defect_mask = read_binary_grid(dir / (stem + "_defect.en2t"));
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<TrainingSample> to_training_samples(std::vector<StoredSample> const &samples)
{
  std::vector<TrainingSample> out;
  out.reserve(samples.size());
  for (auto const &s : samples) {
    out.push_back(make_training_sample(s.image, s.y_u, s.mask));
  }
  return out;
}

} // namespace en2
