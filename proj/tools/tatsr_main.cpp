#include <CLI11.hpp>
#include <torch/torch.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "tatsr/config.hpp"
#include "tatsr/data.hpp"
#include "tatsr/losses.hpp"
#include "tatsr/pipeline.hpp"
#include "tatsr/recognizer.hpp"
#include "tatsr/sr_model.hpp"

namespace fs = std::filesystem;
using namespace tatsr;

namespace {

std::string to_config_string(const std::string& v) { return v; }
std::string to_config_string(int64_t v) { return std::to_string(v); }
std::string to_config_string(uint64_t v) { return std::to_string(v); }
std::string to_config_string(double v) { return format_double(v); }
std::string to_config_string(bool v) { return v ? "true" : "false"; }

struct FlagBinder {
  ConfigMap& cfg;
  template <typename T>
  void bind(CLI::Option* opt, const std::string& key, const T& var) {
    if (opt && opt->count() > 0) cfg.set(key, to_config_string(var));
  }
};

BlurRadius blur_from_cfg(ConfigMap& cfg, const std::string& key,
                         const std::string& def) {
  return parse_blur_tag(cfg.get_string(key, def));
}

TrainConfig train_config_from(ConfigMap& cfg) {
  TrainConfig t;
  t.lr = cfg.get_double("train.lr", t.lr);
  t.epochs = cfg.get_int("train.epochs", t.epochs);
  t.batch = cfg.get_int("train.batch", t.batch);
  t.seed = cfg.get_uint("seed", 0);
  t.adam_beta1 = cfg.get_double("train.adam_beta1", t.adam_beta1);
  t.adam_beta2 = cfg.get_double("train.adam_beta2", t.adam_beta2);
  t.checkpoint_every = cfg.get_int("train.checkpoint_every", t.checkpoint_every);
  t.val_every = cfg.get_int("train.val_every", t.val_every);
  t.max_steps = cfg.get_int("train.max_steps", t.max_steps);
  t.stop_l2_below = cfg.get_double("train.stop_l2_below", t.stop_l2_below);
  t.cache_hr_features = cfg.get_bool("train.cache_hr_features", t.cache_hr_features);
  t.quiet = cfg.get_bool("train.quiet", t.quiet);

  t.loss.lambda2 = cfg.get_double("loss.lambda2", t.loss.lambda2);
  t.loss.lambda_gp = cfg.get_double("loss.lambda_gp", t.loss.lambda_gp);
  t.loss.lambda_cp = cfg.get_double("loss.lambda_cp", t.loss.lambda_cp);
  auto sw = cfg.get_doubles("loss.scale_weights",
                            {t.loss.scale_weights.begin(), t.loss.scale_weights.end()});
  if (sw.size() != 5) throw ConfigError("loss.scale_weights needs 5 values");
  std::copy(sw.begin(), sw.end(), t.loss.scale_weights.begin());

  t.model.num_blocks = cfg.get_int("model.num_blocks", t.model.num_blocks);
  t.model.channels = cfg.get_int("model.channels", t.model.channels);
  t.model.use_tps = cfg.get_bool("model.use_tps", t.model.use_tps);
  t.model.cctb.heads = cfg.get_int("cctb.heads", t.model.cctb.heads);
  t.model.cctb.ffn_dim = cfg.get_int("cctb.ffn_dim", t.model.cctb.ffn_dim);
  t.model.cctb.dropout = cfg.get_double("cctb.dropout", t.model.cctb.dropout);
  t.model.cctb.layout =
      parse_layout_tag(cfg.get_string("cctb.layout", layout_tag(t.model.cctb.layout)));
  return t;
}

// last val_count train entries become the validation slice
std::pair<DatasetManifest, DatasetManifest> split_validation(
    const DatasetManifest& train_m, int64_t val_count) {
  if (val_count < 0 ||
      val_count >= static_cast<int64_t>(train_m.entries.size())) {
    throw ConfigError("train.val_count must be in [0, train size)");
  }
  DatasetManifest tr = train_m, va = train_m;
  const auto cut = train_m.entries.size() - static_cast<size_t>(val_count);
  tr.entries.assign(train_m.entries.begin(), train_m.entries.begin() + cut);
  va.entries.assign(train_m.entries.begin() + cut, train_m.entries.end());
  return {tr, va};
}

int cmd_synth(ConfigMap& cfg, const std::string& out_dir, bool dry_run) {
  SynthConfig sc;
  sc.out_root = out_dir;
  sc.count = cfg.get_int("data.count", 2200);
  sc.train_split = cfg.get_double("data.split", 10.0 / 11.0);
  sc.seed = cfg.get_uint("seed", 0);
  sc.blur = blur_from_cfg(cfg, "data.blur", "r15_star");
  sc.noise_std = cfg.get_double("data.noise_std", 0.0);
  sc.min_len = cfg.get_int("data.min_len", 3);
  sc.max_len = cfg.get_int("data.max_len", 10);
  cfg.finish();
  if (sc.count < 1) throw ConfigError("data.count must be >= 1");
  if (sc.min_len < 1 || sc.max_len > 24 || sc.min_len > sc.max_len) {
    throw ConfigError("data.min_len/max_len must satisfy 1 <= min <= max <= 24");
  }
  if (dry_run) {
    std::fputs(cfg.snapshot_text().c_str(), stdout);
    return 0;
  }
  auto [train_m, test_m] = build_corpus(sc);
  cfg.write_snapshot(sc.out_root / "config_resolved.txt");
  std::printf("wrote %zu train / %zu test samples under %s\n",
              train_m.entries.size(), test_m.entries.size(),
              sc.out_root.string().c_str());
  return 0;
}

int cmd_train_recognizer(ConfigMap& cfg, const std::string& out_dir, bool dry_run) {
  const auto root = cfg.get_string("data.root", "");
  RecognizerTrainConfig rc;
  rc.epochs = cfg.get_int("rec.epochs", rc.epochs);
  rc.batch = cfg.get_int("rec.batch", rc.batch);
  rc.lr = cfg.get_double("rec.lr", rc.lr);
  rc.seed = cfg.get_uint("seed", 1);
  rc.aug_blur_prob = cfg.get_double("rec.aug_blur_prob", rc.aug_blur_prob);
  rc.aug_noise_std = cfg.get_double("rec.aug_noise_std", rc.aug_noise_std);
  rc.quiet = cfg.get_bool("rec.quiet", rc.quiet);
  cfg.finish();
  if (root.empty()) throw ConfigError("data.root is required");
  if (dry_run) {
    std::fputs(cfg.snapshot_text().c_str(), stdout);
    return 0;
  }
  auto train_m = load_manifest(root, "train");
  auto rec = train_recognizer(train_m, rc);
  const fs::path ckpt = fs::path(out_dir) / "recognizer";
  save_recognizer(rec, ckpt);
  cfg.write_snapshot(fs::path(out_dir) / "config_resolved.txt");

  auto test_m = load_manifest(root, "test");
  const double acc = hr_sequence_accuracy(rec, load_dataset(test_m));
  std::printf("recognizer saved to %s; clean HR test accuracy %.4f\n",
              ckpt.string().c_str(), acc);
  return 0;
}

int cmd_train_sr(ConfigMap& cfg, const std::string& out_dir, bool dry_run) {
  const auto root = cfg.get_string("data.root", "");
  const auto rec_dir = cfg.get_string("recognizer", "");
  auto tc = train_config_from(cfg);
  const auto val_count = cfg.get_int("train.val_count", 200);
  cfg.finish();
  tc.validate();
  if (root.empty()) throw ConfigError("data.root is required");
  if (dry_run) {
    std::fputs(cfg.snapshot_text().c_str(), stdout);
    return 0;
  }
  Recognizer rec{nullptr};
  if (!rec_dir.empty()) {
    Charset expected;
    rec = load_recognizer(rec_dir, &expected);
  } else if (tc.loss.lambda_cp > 0.0) {
    throw StateError("content loss enabled but no recognizer checkpoint given");
  }
  auto full_train = load_manifest(root, "train");
  auto [train_m, val_m] = split_validation(
      full_train, std::min<int64_t>(val_count,
                                    static_cast<int64_t>(full_train.entries.size()) - 1));
  auto res = train(train_m, val_m, tc, rec ? &rec : nullptr, out_dir);
  cfg.write_snapshot(fs::path(out_dir) / "config_resolved.txt");
  std::printf("trained %lld steps; best val acc %.4f; best %s last %s\n",
              static_cast<long long>(res.steps), res.best_val_acc,
              res.best_dir.string().c_str(), res.last_dir.string().c_str());
  return 0;
}

int cmd_eval(ConfigMap& cfg, const std::string& out_dir, bool dry_run) {
  const auto model_dir = cfg.get_string("model", "");
  const auto rec_dir = cfg.get_string("recognizer", "");
  const auto root = cfg.get_string("data.root", "");
  const auto split = cfg.get_string("data.split", "test");
  const auto montage_rows = cfg.get_int("eval.montage_rows", 16);
  cfg.finish();
  if (model_dir.empty() || rec_dir.empty() || root.empty()) {
    throw ConfigError("model, recognizer, and data.root are required");
  }
  if (dry_run) {
    std::fputs(cfg.snapshot_text().c_str(), stdout);
    return 0;
  }
  auto model = load_sr_model(model_dir);
  Charset expected;
  auto rec = load_recognizer(rec_dir, &expected);
  auto m = load_manifest(root, split);
  if (m.entries.empty()) throw DataError("manifest '" + split + "' is empty");
  auto report = evaluate(model, m, rec);
  const fs::path out(out_dir);
  save_eval_report(report, out / "report.json");
  auto samples = load_dataset(m);
  save_montage(samples,
               [&](const torch::Tensor& lr) { return model->forward(lr); }, rec,
               out / "montage.png", montage_rows);
  cfg.write_snapshot(out / "config_resolved.txt");
  std::printf("accuracy %.4f psnr %.2f ssim %.4f over %lld samples; report at %s\n",
              report.overall_acc, report.psnr, report.ssim,
              static_cast<long long>(report.n_samples),
              (out / "report.json").string().c_str());
  return 0;
}

int cmd_infer(ConfigMap& cfg, bool dry_run) {
  const auto model_dir = cfg.get_string("model", "");
  const auto input = cfg.get_string("input", "");
  const auto output = cfg.get_string("output", "");
  cfg.finish();
  if (model_dir.empty() || input.empty() || output.empty()) {
    throw ConfigError("model, input, and output are required");
  }
  if (dry_run) {
    std::fputs(cfg.snapshot_text().c_str(), stdout);
    return 0;
  }
  auto model = load_sr_model(model_dir);
  auto img = load_png(input);
  if (img.size(1) != kLrHeight || img.size(2) != kLrWidth) {
    std::printf("resizing %lldx%lld input to %lldx%lld\n",
                static_cast<long long>(img.size(1)),
                static_cast<long long>(img.size(2)),
                static_cast<long long>(kLrHeight),
                static_cast<long long>(kLrWidth));
    img = resize_bicubic(img, kLrHeight, kLrWidth);
  }
  torch::NoGradGuard ng;
  auto sr = model->forward(img);
  save_png(sr, output);
  cfg.write_snapshot(fs::path(output).string() + ".config.txt");
  std::printf("wrote %s\n", output.c_str());
  return 0;
}

int cmd_bench_blur(ConfigMap& cfg, const std::string& out_dir, bool dry_run) {
  const auto model_dir = cfg.get_string("model", "");
  const auto rec_dir = cfg.get_string("recognizer", "");
  const auto root = cfg.get_string("data.root", "");
  const auto split = cfg.get_string("data.split", "test");
  cfg.finish();
  if (model_dir.empty() || rec_dir.empty() || root.empty()) {
    throw ConfigError("model, recognizer, and data.root are required");
  }
  if (dry_run) {
    std::fputs(cfg.snapshot_text().c_str(), stdout);
    return 0;
  }
  auto model = load_sr_model(model_dir);
  Charset expected;
  auto rec = load_recognizer(rec_dir, &expected);
  auto m = load_manifest(root, split);
  auto rows = bench_blur(model, m, rec);
  const fs::path out(out_dir);
  save_blur_sweep(rows, out / "blur_sweep.tsv");
  cfg.write_snapshot(out / "config_resolved.txt");
  for (const auto& r : rows) {
    std::printf("%-9s bicubic %.4f model %.4f\n", blur_tag(r.radius).c_str(),
                r.bicubic_acc, r.model_acc);
  }
  return 0;
}

int cmd_ablate(ConfigMap& cfg, const std::string& out_dir, bool dry_run) {
  const auto suite = parse_suite_tag(cfg.get_string("suite", "loss_weights"));
  const auto root = cfg.get_string("data.root", "");
  const auto rec_dir = cfg.get_string("recognizer", "");
  auto tc = train_config_from(cfg);
  const auto val_count = cfg.get_int("train.val_count", 200);
  cfg.finish();
  tc.validate();
  if (root.empty() || rec_dir.empty()) {
    throw ConfigError("data.root and recognizer are required");
  }
  if (dry_run) {
    std::fputs(cfg.snapshot_text().c_str(), stdout);
    return 0;
  }
  Charset expected;
  auto rec = load_recognizer(rec_dir, &expected);
  auto full_train = load_manifest(root, "train");
  auto [train_m, val_m] = split_validation(
      full_train, std::min<int64_t>(val_count,
                                    static_cast<int64_t>(full_train.entries.size()) - 1));
  auto test_m = load_manifest(root, "test");
  auto rows = run_ablation(suite, tc, train_m, val_m, test_m, rec, out_dir);
  cfg.write_snapshot(fs::path(out_dir) / "config_resolved.txt");
  for (const auto& r : rows) {
    std::printf("%-28s acc %.4f psnr %.2f ssim %.4f\n", r.variant.c_str(), r.acc,
                r.psnr, r.ssim);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-text image super-resolution workbench"};
  app.require_subcommand(1);

  std::string config_file, output_dir;
  bool dry_run = false;
  int64_t threads = 1;
  app.add_option("--threads", threads, "intra-op thread count")
      ->capture_default_str();

  struct Sub {
    CLI::App* app = nullptr;
    ConfigMap cfg;
  };

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "key = value config file");
    sub->add_option("-o,--output-dir", output_dir, "artifact directory");
    sub->add_flag("--dry-run", dry_run, "resolve and print config, write nothing");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "build a synthetic paired corpus");
  add_common(synth);
  int64_t count = 0, min_len = 0, max_len = 0;
  double split = 0.0, noise_std = 0.0;
  uint64_t seed = 0;
  std::string blur;
  auto* o_count = synth->add_option("--count", count, "total sample count");
  auto* o_split = synth->add_option("--split", split, "train fraction");
  auto* o_blur = synth->add_option("--blur", blur, "degradation radius tag");
  auto* o_noise = synth->add_option("--noise-std", noise_std, "additive noise std");
  auto* o_minl = synth->add_option("--min-len", min_len, "min word length");
  auto* o_maxl = synth->add_option("--max-len", max_len, "max word length");
  auto* o_seed_s = synth->add_option("--seed", seed, "corpus seed");

  // train-recognizer
  auto* trec = app.add_subcommand("train-recognizer", "train the CTC recognizer");
  add_common(trec);
  std::string data_root;
  int64_t r_epochs = 0, r_batch = 0;
  double r_lr = 0.0;
  auto* o_root_r = trec->add_option("--data", data_root, "dataset root");
  auto* o_repochs = trec->add_option("--epochs", r_epochs, "training epochs");
  auto* o_rbatch = trec->add_option("--batch", r_batch, "batch size");
  auto* o_rlr = trec->add_option("--lr", r_lr, "learning rate");
  auto* o_seed_r = trec->add_option("--seed", seed, "training seed");

  // train-sr
  auto* tsr = app.add_subcommand("train-sr", "train the restoration model");
  add_common(tsr);
  std::string rec_dir, layout;
  int64_t s_epochs = 0, s_batch = 0, s_blocks = 0, s_channels = 0, s_val_count = 0;
  int64_t s_max_steps = 0;
  double s_lr = 0.0, lambda2 = 0.0, lambda_gp = 0.0, lambda_cp = 0.0;
  bool no_cp = false, no_tps = false, full_scale = false;
  auto* o_root_s = tsr->add_option("--data", data_root, "dataset root");
  auto* o_rec_s = tsr->add_option("--recognizer", rec_dir, "recognizer checkpoint");
  auto* o_sepochs = tsr->add_option("--epochs", s_epochs, "training epochs");
  auto* o_sbatch = tsr->add_option("--batch", s_batch, "batch size");
  auto* o_slr = tsr->add_option("--lr", s_lr, "learning rate");
  auto* o_seed_t = tsr->add_option("--seed", seed, "training seed");
  auto* o_blocks = tsr->add_option("--blocks", s_blocks, "criss-cross block count");
  auto* o_channels = tsr->add_option("--channels", s_channels, "trunk channels");
  auto* o_layout = tsr->add_option("--layout", layout, "block layout tag");
  auto* o_l2 = tsr->add_option("--lambda2", lambda2, "pixel loss weight");
  auto* o_lgp = tsr->add_option("--lambda-gp", lambda_gp, "gradient prior weight");
  auto* o_lcp = tsr->add_option("--lambda-cp", lambda_cp, "content loss weight");
  auto* o_valc = tsr->add_option("--val-count", s_val_count,
                                 "train entries reserved for validation");
  auto* o_maxst = tsr->add_option("--max-steps", s_max_steps, "hard step cap");
  tsr->add_flag("--no-cp", no_cp, "disable the content loss");
  tsr->add_flag("--no-tps", no_tps, "disable the alignment stage");
  tsr->add_flag("--full-scale", full_scale, "500 epochs, batch 128");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  add_common(ev);
  std::string model_dir, eval_split;
  auto* o_model_e = ev->add_option("--model", model_dir, "sr checkpoint dir");
  auto* o_rec_e = ev->add_option("--recognizer", rec_dir, "recognizer checkpoint");
  auto* o_root_e = ev->add_option("--data", data_root, "dataset root");
  auto* o_split_e = ev->add_option("--split", eval_split, "train or test");

  // infer
  auto* inf = app.add_subcommand("infer", "restore a single image");
  add_common(inf);
  std::string in_png, out_png;
  auto* o_model_i = inf->add_option("--model", model_dir, "sr checkpoint dir");
  auto* o_in = inf->add_option("--input", in_png, "input png");
  auto* o_out = inf->add_option("--output", out_png, "output png");

  // bench-blur
  auto* bb = app.add_subcommand("bench-blur", "blur-radius sweep table");
  add_common(bb);
  auto* o_model_b = bb->add_option("--model", model_dir, "sr checkpoint dir");
  auto* o_rec_b = bb->add_option("--recognizer", rec_dir, "recognizer checkpoint");
  auto* o_root_b = bb->add_option("--data", data_root, "dataset root");
  auto* o_split_b = bb->add_option("--split", eval_split, "train or test");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and score a variant suite");
  add_common(ab);
  std::string suite;
  auto* o_suite = ab->add_option("--suite", suite,
                                 "loss_weights|scale_weights|layouts|block_swap");
  auto* o_root_a = ab->add_option("--data", data_root, "dataset root");
  auto* o_rec_a = ab->add_option("--recognizer", rec_dir, "recognizer checkpoint");
  auto* o_sepochs_a = ab->add_option("--epochs", s_epochs, "training epochs");
  auto* o_seed_a = ab->add_option("--seed", seed, "training seed");
  auto* o_blocks_a = ab->add_option("--blocks", s_blocks, "criss-cross block count");
  auto* o_channels_a = ab->add_option("--channels", s_channels, "trunk channels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  torch::set_num_threads(static_cast<int>(threads));

  try {
    ConfigMap cfg;
    if (!config_file.empty()) cfg.merge_file(config_file);
    FlagBinder bind{cfg};

    if (app.got_subcommand(synth)) {
      bind.bind(o_count, "data.count", count);
      bind.bind(o_split, "data.split", split);
      bind.bind(o_blur, "data.blur", blur);
      bind.bind(o_noise, "data.noise_std", noise_std);
      bind.bind(o_minl, "data.min_len", min_len);
      bind.bind(o_maxl, "data.max_len", max_len);
      bind.bind(o_seed_s, "seed", seed);
      if (output_dir.empty()) throw ConfigError("--output-dir is required");
      return cmd_synth(cfg, output_dir, dry_run);
    }
    if (app.got_subcommand(trec)) {
      bind.bind(o_root_r, "data.root", data_root);
      bind.bind(o_repochs, "rec.epochs", r_epochs);
      bind.bind(o_rbatch, "rec.batch", r_batch);
      bind.bind(o_rlr, "rec.lr", r_lr);
      bind.bind(o_seed_r, "seed", seed);
      if (output_dir.empty()) throw ConfigError("--output-dir is required");
      return cmd_train_recognizer(cfg, output_dir, dry_run);
    }
    if (app.got_subcommand(tsr)) {
      bind.bind(o_root_s, "data.root", data_root);
      bind.bind(o_rec_s, "recognizer", rec_dir);
      bind.bind(o_sepochs, "train.epochs", s_epochs);
      bind.bind(o_sbatch, "train.batch", s_batch);
      bind.bind(o_slr, "train.lr", s_lr);
      bind.bind(o_seed_t, "seed", seed);
      bind.bind(o_blocks, "model.num_blocks", s_blocks);
      bind.bind(o_channels, "model.channels", s_channels);
      bind.bind(o_layout, "cctb.layout", layout);
      bind.bind(o_l2, "loss.lambda2", lambda2);
      bind.bind(o_lgp, "loss.lambda_gp", lambda_gp);
      bind.bind(o_lcp, "loss.lambda_cp", lambda_cp);
      bind.bind(o_valc, "train.val_count", s_val_count);
      bind.bind(o_maxst, "train.max_steps", s_max_steps);
      if (no_cp) cfg.set("loss.lambda_cp", "0.0");
      if (no_tps) cfg.set("model.use_tps", "false");
      if (full_scale) {
        cfg.set("train.epochs", "500");
        cfg.set("train.batch", "128");
      }
      if (output_dir.empty()) throw ConfigError("--output-dir is required");
      return cmd_train_sr(cfg, output_dir, dry_run);
    }
    if (app.got_subcommand(ev)) {
      bind.bind(o_model_e, "model", model_dir);
      bind.bind(o_rec_e, "recognizer", rec_dir);
      bind.bind(o_root_e, "data.root", data_root);
      bind.bind(o_split_e, "data.split", eval_split);
      if (output_dir.empty()) throw ConfigError("--output-dir is required");
      return cmd_eval(cfg, output_dir, dry_run);
    }
    if (app.got_subcommand(inf)) {
      bind.bind(o_model_i, "model", model_dir);
      bind.bind(o_in, "input", in_png);
      bind.bind(o_out, "output", out_png);
      return cmd_infer(cfg, dry_run);
    }
    if (app.got_subcommand(bb)) {
      bind.bind(o_model_b, "model", model_dir);
      bind.bind(o_rec_b, "recognizer", rec_dir);
      bind.bind(o_root_b, "data.root", data_root);
      bind.bind(o_split_b, "data.split", eval_split);
      if (output_dir.empty()) throw ConfigError("--output-dir is required");
      return cmd_bench_blur(cfg, output_dir, dry_run);
    }
    if (app.got_subcommand(ab)) {
      bind.bind(o_suite, "suite", suite);
      bind.bind(o_root_a, "data.root", data_root);
      bind.bind(o_rec_a, "recognizer", rec_dir);
      bind.bind(o_sepochs_a, "train.epochs", s_epochs);
      bind.bind(o_seed_a, "seed", seed);
      bind.bind(o_blocks_a, "model.num_blocks", s_blocks);
      bind.bind(o_channels_a, "model.channels", s_channels);
      if (output_dir.empty()) throw ConfigError("--output-dir is required");
      return cmd_ablate(cfg, output_dir, dry_run);
    }
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
