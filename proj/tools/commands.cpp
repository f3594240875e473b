#include "commands.hpp"

#include "en2/en2t.hpp"
#include "en2/errors.hpp"
#include "en2/fourier.hpp"
#include "en2/metrics.hpp"
#include "en2/network.hpp"
#include "en2/phantom.hpp"
#include "en2/store.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <thread>

namespace fs = std::filesystem;

namespace en2::cli {

namespace {

template <typename Fn>
int guarded(char const *command, Fn &&fn)
{
  try {
    return fn();
  } catch (ConfigError const &e) {
    fmt::print(stderr, "{}: configuration error: {}\n", command, e.what());
    return kConfig;
  } catch (ContractViolation const &e) {
    fmt::print(stderr, "{}: invalid input: {}\n", command, e.what());
    return kConfig;
  } catch (FormatError const &e) {
    fmt::print(stderr, "{}: format error: {}\n", command, e.what());
    return kConfig;
  } catch (IoError const &e) {
    fmt::print(stderr, "{}: I/O error: {}\n", command, e.what());
    return kIo;
  } catch (NumericError const &e) {
    fmt::print(stderr, "{}: numeric failure: {}\n", command, e.what());
    return kNumeric;
  }
}

std::pair<Index, Index> parse_size(std::string const &s)
{
  auto const x = s.find('x');
  if (x == std::string::npos) { throw ConfigError("--size must look like HxW, got '" + s + "'"); }
  try {
    std::size_t u1 = 0;
    std::size_t u2 = 0;
    auto const h = std::stoul(s.substr(0, x), &u1);
    auto const w = std::stoul(s.substr(x + 1), &u2);
    if (u1 == x && u2 == s.size() - x - 1) { return {h, w}; }
  } catch (std::exception const &) {
  }
  throw ConfigError("--size must look like HxW, got '" + s + "'");
}

void write_text(fs::path const &path, std::string const &text)
{
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Index thread_count()
{
  if (char const *env = std::getenv("EN2_THREADS")) {
    char *end = nullptr;
    auto const n = std::strtoul(env, &end, 10);
    if (end != env && n > 0) { return n; }
  }
  return 1;
}

// Runs fn(i) for i in [0, n) on up to EN2_THREADS workers; results are
// written by index so output order never depends on scheduling.
void parallel_for(Index n, std::function<void(Index)> const &fn)
{
  auto const workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (Index i = 0; i < n; i++) {
      fn(i);
    }
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (Index w = 0; w < workers; w++) {
    pool.emplace_back([&, w] {
      try {
        for (Index i = w; i < n; i += workers) {
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) {
    t.join();
  }
  for (auto &e : errors) {
    if (e) { std::rethrow_exception(e); }
  }
}

} // namespace

int gen_data(GenDataArgs const &args)
{
  return guarded("gen-data", [&] {
    auto const [h, w] = parse_size(args.size);
    DatasetConfig cfg;
    cfg.height = h;
    cfg.width = w;
    cfg.af = args.af;
    cfg.center_fraction = args.center_fraction;
    cfg.noise_sigma = args.noise_sigma;
    cfg.phantom.min_defects = args.min_defects;
    cfg.phantom.max_defects = args.max_defects;
    cfg.phantom.defect_intensity = args.defect_intensity;
    auto const samples = make_dataset(args.n, args.seed, cfg);
    write_dataset(args.out, args.seed, cfg, samples);
    fmt::print("wrote {} samples ({}x{}, AF {}) to {}\n", samples.size(), h, w, format_number(args.af), args.out);
    return kOk;
  });
}

int mask(MaskArgs const &args)
{
  return guarded("mask", [&] {
    auto const [h, w] = parse_size(args.size);
    auto const m = make_mask(h, w, args.af, args.center_fraction, args.seed);
    write_en2t(m.expand(), args.out);
    fmt::print("{} of {} columns sampled\n", m.sampled_columns(), w);
    return kOk;
  });
}

int train(TrainArgs const &args)
{
  return guarded("train", [&] {
    NetworkConfig net;
    TrainConfig tc;
    if (!args.config.empty()) { apply_config(read_key_values(args.config), net, tc); }
    if (args.epochs) { tc.epochs = *args.epochs; }
    if (args.seed) { tc.seed = *args.seed; }

    auto const data = read_dataset(args.data);
    net.height = data.config.height;
    net.width = data.config.width;
    auto samples = to_training_samples(data.samples);
    std::vector<TrainingSample> val;
    if (!args.val_data.empty()) {
      val = to_training_samples(read_dataset(args.val_data).samples);
    } else {
      if (!(args.val_fraction >= 0.0 && args.val_fraction < 1.0)) { throw ConfigError("--val-frac must be in [0, 1)"); }
      auto const hold = static_cast<Index>(std::floor(args.val_fraction * static_cast<double>(samples.size())));
      val.assign(samples.end() - static_cast<std::ptrdiff_t>(hold), samples.end());
      samples.resize(samples.size() - hold);
    }
    if (samples.empty()) { throw ConfigError("no training samples left after the validation split"); }

    fs::path const out = args.out;
    auto write_all = [&](NetworkParams const &p, Index steps, std::vector<EpochRecord> const &h) {
      save_checkpoint(out, p, steps, h);
      write_text(out.string() + ".loss.csv", loss_history_csv(h));
    };
    try {
      auto const result = ::en2::train(samples, val, net, tc);
      write_all(result.params, result.steps, result.history);
      if (result.history.empty()) {
        fmt::print("no epochs run; wrote initial parameters to {}\n", args.out);
      } else {
        auto const &last = result.history.back();
        fmt::print("final train_loss={} val_loss={}\n", format_number(last.train_loss), format_number(last.val_loss));
      }
      return kOk;
    } catch (TrainingAborted const &e) {
      write_all(e.last_good, e.steps, e.history);
      fmt::print(stderr, "train: {}; last good parameters written to {}\n", e.what(), args.out);
      return kNumeric;
    }
  });
}

int recon(ReconArgs const &args)
{
  return guarded("recon", [&] {
    if (args.zero_filled == !args.ckpt.empty()) { throw ConfigError("give exactly one of --ckpt and --zero-filled"); }
    std::optional<Checkpoint> ck;
    if (!args.ckpt.empty()) { ck = load_checkpoint(args.ckpt); }
    auto const dtype = ck && ck->params.config.precision == 32 ? DType::F32 : DType::F64;
    auto run = [&](ComplexGrid const &y_u, SamplingMask const &m) {
      if (y_u.height() != m.height || y_u.width() != m.width) {
        throw ContractViolation("k-space and mask shapes differ");
      }
      return ck ? reconstruct(ck->params, y_u, m) : ifft2_centered(y_u);
    };

    if (!args.data.empty()) {
      auto const data = read_dataset(args.data);
      fs::create_directories(args.out);
      for (auto const &s : data.samples) {
        auto const img = run(s.y_u, s.mask);
        auto const stem = sample_stem(s.id);
        write_en2t(img, fs::path(args.out) / (stem + "_recon.en2t"), dtype);
        if (!args.pgm.empty()) {
          export_pgm(magnitude(img), &s.lung_mask, fs::path(args.out) / (stem + "_recon.pgm"));
        }
      }
      fmt::print("reconstructed {} samples into {}\n", data.samples.size(), args.out);
      return kOk;
    }

    if (args.input.empty() || args.mask.empty()) { throw ConfigError("--input and --mask are required without --data"); }
    auto const y_u = read_complex_grid(args.input);
    auto const m = SamplingMask::from_grid(read_binary_grid(args.mask));
    auto const img = run(y_u, m);
    write_en2t(img, args.out, dtype);
    if (!args.pgm.empty()) { export_pgm(magnitude(img), nullptr, args.pgm); }
    return kOk;
  });
}

namespace {

struct EvalRow
{
  std::string id;
  double af = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double snr = 0.0;
  double dice_defect = 0.0;
  double vdp_ref = 0.0;
  double vdp_rec = 0.0;
};

EvalRow evaluate(std::string id, double af, ComplexGrid const &ref, ComplexGrid const &rec, BinaryGrid const &lung,
                 BinaryGrid const &thoracic, Index clusters)
{
  if (ref.shape() != rec.shape()) { throw ContractViolation("reference and reconstruction shapes differ for " + id); }
  auto const ref_mag = magnitude(ref);
  auto const rec_mag = magnitude(rec);
  EvalRow r;
  r.id = std::move(id);
  r.af = af;
  r.psnr_db = psnr(ref_mag, rec_mag, lung);
  r.ssim = ssim(ref_mag, rec_mag, lung);
  try {
    r.snr = snr_rician(rec_mag, lung, complement(thoracic));
  } catch (DegenerateInput const &) {
    r.snr = std::numeric_limits<double>::quiet_NaN();
  }
  auto const d_ref = kmeans_defect(ref_mag, thoracic, clusters);
  auto const d_rec = kmeans_defect(rec_mag, thoracic, clusters);
  r.dice_defect = dice(d_ref, d_rec);
  r.vdp_ref = vdp(d_ref, thoracic);
  r.vdp_rec = vdp(d_rec, thoracic);
  return r;
}

std::string csv_row(EvalRow const &r)
{
  return fmt::format("{},{},{},{},{},{},{},{}\n", r.id, format_number(r.af), format_number(r.psnr_db),
                     format_number(r.ssim), format_number(r.snr), format_number(r.dice_defect),
                     format_number(r.vdp_ref), format_number(r.vdp_rec));
}

} // namespace

int eval(EvalArgs const &args)
{
  return guarded("eval", [&] {
    std::string csv = "id,af,psnr_db,ssim,snr,dice_defect,vdp_ref_pct,vdp_rec_pct\n";
    if (!fs::is_directory(args.ref)) {
      if (args.masks.empty()) { throw ConfigError("--masks is required in single-image mode"); }
      auto const lung = read_binary_grid(args.masks);
      auto const thoracic = args.thoracic.empty() ? lung : read_binary_grid(args.thoracic);
      auto const row = evaluate(fs::path(args.rec).stem().string(), args.af.value_or(std::nan("")),
                                read_complex_grid(args.ref), read_complex_grid(args.rec), lung, thoracic,
                                args.clusters);
      csv += csv_row(row);
      write_text(args.out, csv);
      fmt::print("psnr_db={} ssim={} dice_defect={}\n", format_number(row.psnr_db), format_number(row.ssim),
                 format_number(row.dice_defect));
      return kOk;
    }

    auto const data = read_dataset(args.ref);
    std::vector<EvalRow> rows(data.samples.size());
    parallel_for(rows.size(), [&](Index i) {
      auto const &s = data.samples[i];
      auto const stem = sample_stem(s.id);
      auto const rec = read_complex_grid(fs::path(args.rec) / (stem + "_recon.en2t"));
      rows[i] = evaluate(stem, s.mask.af_actual(), s.image, rec, s.lung_mask, s.thoracic_mask, args.clusters);
    });

    EvalRow mean{"mean"};
    std::vector<double> vref;
    std::vector<double> vrec;
    for (auto const &r : rows) {
      csv += csv_row(r);
      mean.af += r.af;
      mean.psnr_db += r.psnr_db;
      mean.ssim += r.ssim;
      mean.snr += r.snr;
      mean.dice_defect += r.dice_defect;
      mean.vdp_ref += r.vdp_ref;
      mean.vdp_rec += r.vdp_rec;
      vref.push_back(r.vdp_ref);
      vrec.push_back(r.vdp_rec);
    }
    auto const n = static_cast<double>(rows.size());
    for (double *v : {&mean.af, &mean.psnr_db, &mean.ssim, &mean.snr, &mean.dice_defect, &mean.vdp_ref, &mean.vdp_rec}) {
      *v /= n;
    }
    csv += csv_row(mean);
    write_text(args.out, csv);

    double const r = rows.size() >= 2 ? pearson(vref, vrec) : std::nan("");
    KeyValues summary{
      {"samples", std::to_string(rows.size())},
      {"mean_psnr_db", format_number(mean.psnr_db)},
      {"mean_ssim", format_number(mean.ssim)},
      {"mean_dice_defect", format_number(mean.dice_defect)},
      {"vdp_pearson_r", format_number(r)},
    };
    write_text(args.out + ".summary.txt", format_key_values(summary));
    fmt::print("samples={} mean_psnr_db={} mean_ssim={} vdp_pearson_r={}\n", rows.size(), format_number(mean.psnr_db),
               format_number(mean.ssim), format_number(r));
    return kOk;
  });
}

} // namespace en2::cli
