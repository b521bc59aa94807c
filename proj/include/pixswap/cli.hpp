#pragma once

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pixswap/config.hpp"
#include "pixswap/errors.hpp"
#include "pixswap/gradcheck.hpp"
#include "pixswap/parsing.hpp"
#include "pixswap/pixel_sampling.hpp"
#include "pixswap/png_io.hpp"
#include "pixswap/synthetic.hpp"
#include "pixswap/trainer.hpp"

namespace pixswap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

namespace cli_detail {

namespace fs = std::filesystem;

struct Common {
  std::string workdir = ".";
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  fs::path path(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() ? q : fs::path(workdir) / q;
  }

  RunConfig run_config() const {
    RunConfig cfg;
    if (!config.empty()) apply_config_file(cfg, path(config));
    for (const auto& o : overrides) apply_override(cfg, o);
    if (seed) cfg.seed = *seed;
    return cfg;
  }
};

struct DataArgs {
  std::string data;
  std::string table;

  Dataset load(const Common& c) const {
    const auto table_obj = table.empty() ? LabelRecombinationTable::lip18() : load_recombination_table(c.path(table));
    return load_dataset(c.path(data) / "manifest.csv", table_obj);
  }
};

// Background, head, upper clothes, pants, arms, legs.
inline constexpr std::array<std::array<float, 3>, kNumParts> kPartColours{{
    {0.0f, 0.0f, 0.0f},
    {1.0f, 0.85f, 0.0f},
    {0.9f, 0.1f, 0.1f},
    {0.1f, 0.3f, 0.95f},
    {0.1f, 0.8f, 0.2f},
    {0.7f, 0.2f, 0.8f},
}};

inline Image triptych(const Image& original, const SemanticMask& mask, const Image& generated) {
  const int H = original.height(), W = original.width();
  Image out(3, H, 3 * W);
  for (int r = 0; r < H; ++r) {
    for (int col = 0; col < W; ++col) {
      const auto& colour = kPartColours[mask.at(r, col)];
      for (int c = 0; c < 3; ++c) {
        out.at(c, r, col) = original.at(c, r, col);
        out.at(c, r, W + col) = colour[c];
        out.at(c, r, 2 * W + col) = generated.at(c, r, col);
      }
    }
  }
  return out;
}

inline std::string padded(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%03zu", v);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

inline int cmd_gen_synth(const Common& c, const std::string& out_dir, SynthConfig sc, std::uint64_t seed,
                         std::ostream& out) {
  RngStream rng(seed);
  const Dataset ds = generate_synthetic(sc, rng, c.path(out_dir));
  out << "wrote " << ds.size() << " records to " << c.path(out_dir).string() << "\n";
  return kExitOk;
}

inline int cmd_preview(const Common& c, const DataArgs& d, const std::string& out_dir, std::size_t n,
                       std::ostream& out) {
  const RunConfig cfg = c.run_config();
  const Dataset ds = d.load(c);
  auto train = ds.indices(Split::kTrain);
  if (train.empty()) throw DataError("dataset has no training records to preview");
  if (n == 0) throw UsageError("--n must be at least 1");

  RngStream rng(cfg.seed);
  for (std::size_t i = train.size(); i > 1; --i) std::swap(train[i - 1], train[rng.uniform_index(i)]);
  train.resize(std::min(n, train.size()));

  Batch batch;
  for (auto i : train) {
    Image img = ds.load_image(i);
    SemanticMask mask = ds.load_mask(i);
    if (!batch.images.empty() && (img.height() != batch.images[0].height() || img.width() != batch.images[0].width())) {
      img = resize_bilinear(img, batch.images[0].height(), batch.images[0].width());
      mask = resize_nearest(mask, batch.images[0].height(), batch.images[0].width());
    }
    batch.images.push_back(std::move(img));
    batch.masks.push_back(std::move(mask));
    batch.identities.push_back(static_cast<int>(batch.identities.size()));
  }
  const Batch generated = generate(batch, cfg.sampling, rng);

  const fs::path dir = c.path(out_dir);
  fs::create_directories(dir);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const fs::path file = dir / ("preview_" + padded(i) + ".png");
    png::write_rgb(file, triptych(batch.images[i], batch.masks[i], generated.images[i]));
    out << file.string() << "  <- " << ds.record(train[i]).image_path << "\n";
  }
  return kExitOk;
}

inline void print_result(std::ostream& out, const ExperimentResult& res) {
  out << res.variant << "\n  " << res.eval.cross.table() << "\n  " << res.eval.same.table() << "\n";
}

inline StepCallback progress(std::ostream& err, const std::string& label, long total) {
  const long every = std::max(1L, total / 10);
  return [&err, label, total, every](long step, const LossReport& rep) {
    if (step % every != 0 && step != total) return;
    err << label << " step " << step << "/" << total << " total " << rep.total << " ce " << rep.ce << " triplet "
        << rep.triplet;
    if (rep.mse) err << " mse " << *rep.mse;
    err << "\n";
  };
}

inline int cmd_train(const Common& c, const DataArgs& d, const std::string& out_dir, std::ostream& out,
                     std::ostream& err) {
  const RunConfig cfg = c.run_config();
  cfg.validate();
  const Dataset ds = d.load(c);
  const fs::path dir = c.path(out_dir);
  fs::create_directories(dir);
  write_text(dir / "config.cfg", to_config_text(cfg));
  const auto res = run_experiment(cfg, ds, dir, progress(err, cfg.ablation.name(), cfg.steps));
  print_result(out, res);
  return kExitOk;
}

inline int cmd_eval(const Common& c, const DataArgs& d, const std::string& checkpoint, const std::string& out_dir,
                    std::ostream& out) {
  const Dataset ds = d.load(c);
  const auto net = load_checkpoint<Scalar>(c.path(checkpoint));
  const auto res = evaluate_both(net, ds);
  out << res.cross.table() << "\n" << res.same.table() << "\n";
  if (!out_dir.empty()) {
    const fs::path dir = c.path(out_dir);
    fs::create_directories(dir);
    write_json(dir / "eval_cross_clothes.json", res.cross.to_json());
    write_json(dir / "eval_same_clothes.json", res.same.to_json());
  }
  return kExitOk;
}

inline int cmd_check_grad(const Common& c, int cases, double tolerance, std::ostream& out) {
  const RunConfig cfg = c.run_config();
  if (cases < 1) throw UsageError("--cases must be at least 1");
  RngStream rng(cfg.seed);
  bool ok = true;
  for (int k = 0; k < cases; ++k) {
    GradCheckCase gc;
    gc.net.input_channels = 3;
    gc.net.input_height = 8;
    gc.net.input_width = 8;
    gc.net.widths = k % 2 == 0 ? std::vector<int>{2, 3} : std::vector<int>{3};
    gc.net.embedding_dim = 3 + static_cast<int>(rng.uniform_index(3));
    gc.identities = 2 + static_cast<int>(rng.uniform_index(2));
    gc.instances = 2;
    gc.loss = cfg.loss;
    gc.use_mse = k % 3 != 2;
    gc.seed = rng.next_u64();
    const auto rep = check_total_loss_gradients(gc);
    const bool pass = rep.max_relative_error < tolerance;
    ok = ok && pass;
    out << "case " << k << (pass ? " ok " : " FAIL ") << "max_rel_err " << rep.max_relative_error << " at "
        << rep.worst_parameter << " (checked " << rep.checked << ", skipped " << rep.skipped << ")\n";
  }
  if (!ok) throw TrainingError("gradient check exceeded relative tolerance " + std::to_string(tolerance));
  return kExitOk;
}

inline int cmd_ablate(const Common& c, const DataArgs& d, const std::string& out_dir, std::ostream& out,
                      std::ostream& err) {
  const RunConfig base = c.run_config();
  base.validate();
  const Dataset ds = d.load(c);
  const fs::path dir = c.path(out_dir);
  fs::create_directories(dir);
  write_text(dir / "config.cfg", to_config_text(base));

  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const auto& row : ablation_rows()) {
    RunConfig cfg = base;
    cfg.ablation = row;
    const auto res = run_experiment(cfg, ds, dir / row_directory(row), progress(err, row.name(), cfg.steps));
    print_result(out, res);
    summary.push_back(res.to_json(cfg));
  }
  write_json(dir / "summary.json", summary);
  return kExitOk;
}

}  // namespace cli_detail

/// Runs one command line. Errors are reported on `err` and mapped to exit codes:
/// 1 usage/config, 2 data, 3 runtime/training.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"pixswap: semantic pixel sampling for cloth-changing re-ID"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--workdir", common.workdir, "root for every relative path")->capture_default_str();

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "flat key=value run config");
    sub->add_option("--set", common.overrides, "override key=value (repeatable)");
    sub->add_option("--seed", common.seed, "seed (overrides the config)");
  };
  DataArgs data;
  const auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", data.data, "dataset directory containing manifest.csv")->required();
    sub->add_option("--table", data.table, "label recombination table (default: LIP 18-label grouping)");
  };

  std::string out_dir;

  auto* gen = app.add_subcommand("gen-synth", "generate the synthetic pedestrian dataset");
  SynthConfig sc;
  std::uint64_t gen_seed = 0;
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_option("--ids", sc.identities)->capture_default_str();
  gen->add_option("--outfits", sc.outfits)->capture_default_str();
  gen->add_option("--per-outfit", sc.per_outfit)->capture_default_str();
  gen->add_option("--height", sc.height)->capture_default_str();
  gen->add_option("--width", sc.width)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();

  auto* preview = app.add_subcommand("preview-aug", "write original | mask | generated triptychs");
  std::size_t preview_n = 4;
  add_common(preview);
  add_data(preview);
  preview->add_option("--n", preview_n, "number of samples")->capture_default_str();
  preview->add_option("--out", out_dir, "output directory (default <data>/preview)");

  auto* train = app.add_subcommand("train", "train one configuration and evaluate it");
  add_common(train);
  add_data(train);
  train->add_option("--out", out_dir, "run directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on both protocols");
  std::string checkpoint;
  add_data(eval);
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--out", out_dir, "directory for the eval JSONs");

  auto* grad = app.add_subcommand("check-grad", "finite-difference check of the training objective");
  int grad_cases = 5;
  double grad_tol = 1e-3;
  add_common(grad);
  grad->add_option("--cases", grad_cases)->capture_default_str();
  grad->add_option("--tolerance", grad_tol)->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "run the component ablation rows");
  add_common(ablate);
  add_data(ablate);
  ablate->add_option("--out", out_dir, "output directory (default <data>/ablate)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(common, out_dir, sc, gen_seed, out);
    if (preview->parsed()) {
      return cmd_preview(common, data, out_dir.empty() ? data.data + "/preview" : out_dir, preview_n, out);
    }
    if (train->parsed()) return cmd_train(common, data, out_dir, out, err);
    if (eval->parsed()) return cmd_eval(common, data, checkpoint, out_dir, out);
    if (grad->parsed()) return cmd_check_grad(common, grad_cases, grad_tol, out);
    if (ablate->parsed()) return cmd_ablate(common, data, out_dir.empty() ? data.data + "/ablate" : out_dir, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const RuntimeFailure& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace pixswap
