#include "commands.hpp"

#include <CLI11.hpp>

int main(int argc, char **argv)
{
  using namespace en2::cli;
  CLI::App app{"EN2 complex CNN for undersampled MRI reconstruction"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto *g = app.add_subcommand("gen-data", "Generate a synthetic phantom dataset");
  g->add_option("--n", gen.n, "Number of samples")->required();
  g->add_option("--size", gen.size, "Grid size HxW")->required();
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--af", gen.af, "Acceleration factor");
  g->add_option("--center-frac", gen.center_fraction, "Fully sampled centre fraction");
  g->add_option("--noise-sigma", gen.noise_sigma, "Complex Gaussian k-space noise");
  g->add_option("--min-defects", gen.min_defects);
  g->add_option("--max-defects", gen.max_defects);
  g->add_option("--defect-intensity", gen.defect_intensity);

  MaskArgs mask_args;
  auto *m = app.add_subcommand("mask", "Write a variable-density Cartesian mask");
  m->add_option("--size", mask_args.size, "Grid size HxW")->required();
  m->add_option("--af", mask_args.af, "Acceleration factor")->required();
  m->add_option("--center-frac", mask_args.center_fraction);
  m->add_option("--seed", mask_args.seed);
  m->add_option("--out", mask_args.out, "Output EN2T file")->required();

  TrainArgs tr;
  auto *t = app.add_subcommand("train", "Train a network on a dataset directory");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--config", tr.config, "key=value configuration file");
  t->add_option("--val-data", tr.val_data, "Separate validation dataset");
  t->add_option("--val-frac", tr.val_fraction, "Fraction held out for validation when --val-data is absent");
  t->add_option("--epochs", tr.epochs);
  t->add_option("--seed", tr.seed);
  t->add_option("--out", tr.out, "Checkpoint path")->required();

  ReconArgs rc;
  auto *r = app.add_subcommand("recon", "Reconstruct images from undersampled k-space");
  r->add_option("--ckpt", rc.ckpt, "Checkpoint");
  r->add_flag("--zero-filled", rc.zero_filled, "Inverse FFT of the measured data instead of a network");
  r->add_option("--input", rc.input, "Undersampled k-space (EN2T)");
  r->add_option("--mask", rc.mask, "Sampling mask (EN2T u8)");
  r->add_option("--data", rc.data, "Dataset directory (batch mode)");
  r->add_option("--out", rc.out, "Output image file, or directory in batch mode")->required();
  r->add_option("--pgm", rc.pgm, "Also write a 16-bit PGM magnitude image");

  EvalArgs ev;
  auto *e = app.add_subcommand("eval", "Compute image-quality and VDP metrics");
  e->add_option("--ref", ev.ref, "Reference image file or dataset directory")->required();
  e->add_option("--rec", ev.rec, "Reconstruction file or directory")->required();
  e->add_option("--masks", ev.masks, "Lung mask file (single-image mode)");
  e->add_option("--thoracic", ev.thoracic, "Thoracic mask file (defaults to the lung mask)");
  e->add_option("--af", ev.af, "Acceleration factor reported in single-image mode");
  e->add_option("--clusters", ev.clusters, "K for defect segmentation");
  e->add_option("--out", ev.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const &h) {
    return app.exit(h);
  } catch (CLI::ParseError const &err) {
    app.exit(err);
    return kConfig;
  }

  if (g->parsed()) { return gen_data(gen); }
  if (m->parsed()) { return mask(mask_args); }
  if (t->parsed()) { return train(tr); }
  if (r->parsed()) { return recon(rc); }
  if (e->parsed()) { return eval(ev); }
  return kConfig;
}
