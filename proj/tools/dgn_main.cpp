#if __has_include(<malloc.h>)
#include <malloc.h>
#define DGN_HAVE_MALLOPT 1
#endif

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dgn/cv.hpp"
#include "dgn/data.hpp"
#include "dgn/errors.hpp"
#include "dgn/metrics.hpp"
#include "dgn/model.hpp"
#include "dgn/optim.hpp"
#include "dgn/selfcheck.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Exit codes: 0 success, 1 check/assertion failure, 2 usage/environment error.
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

struct GenDataArgs {
  std::string preset;
  std::string out;
  dgn::SyntheticSpec spec;
};

struct ModelFlags {
  int kernel = 7;
  int step = 1;
  int depth = 8;
  int mlp_hidden = 128;
  double dropout_conv = 0.25;
  double dropout_mlp = 0.5;
  double leaky_slope = 0.01;
  bool pointwise_mix = false;
  std::string variant = "full";

  dgn::ModelConfig to_config(const dgn::EegDataset& ds) const {
    dgn::ModelConfig m;
    m.n_channels = ds.n_channels;
    m.n_timesteps = ds.n_timesteps;
    m.n_classes = ds.n_classes;
    m.kernel_size = kernel;
    m.delta_step = step;
    m.hidden_depth = depth;
    m.mlp_hidden = mlp_hidden;
    m.dropout_conv = dropout_conv;
    m.dropout_mlp = dropout_mlp;
    m.leaky_slope = leaky_slope;
    m.pointwise_mix_all = pointwise_mix;
    m.variant = dgn::variant_from_name(variant);
    return m;
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
  cmd->add_option("--kernel", mf.kernel, "residual conv kernel size (odd)");
  cmd->add_option("--step", mf.step, "bidirectional delta step S");
  cmd->add_option("--depth", mf.depth, "per-channel hidden depth D");
  cmd->add_option("--mlp-hidden", mf.mlp_hidden, "first MLP width M");
  cmd->add_option("--dropout-conv", mf.dropout_conv, "dropout inside residual blocks");
  cmd->add_option("--dropout-mlp", mf.dropout_mlp, "dropout inside MLP blocks");
  cmd->add_option("--leaky-slope", mf.leaky_slope, "LeakyReLU negative slope");
  cmd->add_flag("--pointwise-mix", mf.pointwise_mix,
                "let the 1x1 conv mix across all feature channels (groups=1)");
  cmd->add_option("--variant", mf.variant, "full|mlp_only|delta_mlp|gtc_mlp");
}

void apply_preset(dgn::SyntheticSpec& spec, const std::string& preset) {
  if (preset == "seedvig-like") {
    spec.name = "seedvig-like";
    spec.n_channels = 17;
    spec.n_timesteps = 1600;
    spec.n_classes = 3;
    spec.sampling_rate_hz = 200.0f;
  } else if (preset == "sadt-like") {
    spec.name = "sadt-like";
    spec.n_channels = 30;
    spec.n_timesteps = 384;
    spec.n_classes = 2;
    spec.sampling_rate_hz = 128.0f;
  } else if (!preset.empty()) {
    throw std::invalid_argument("unknown preset: " + preset);
  }
}

std::string meta_sidecar_path(const std::string& out) {
  fs::path p(out);
  p.replace_extension(".meta.json");
  return p.string();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << content;
  if (!f) throw std::runtime_error("short write to " + path);
}

int cmd_gen_data(const GenDataArgs& args) {
  dgn::EegDataset ds = dgn::generate_synthetic(args.spec);
  dgn::save_dataset(ds, args.out);
  ordered_json meta;
  meta["generator"] = {{"name", "dgn gen-data"}, {"version", kToolVersion}};
  meta["spec"] = ordered_json{{"name", args.spec.name},
                              {"preset", args.preset},
                              {"n_subjects", args.spec.n_subjects},
                              {"samples_per_subject", args.spec.samples_per_subject},
                              {"n_channels", args.spec.n_channels},
                              {"n_timesteps", args.spec.n_timesteps},
                              {"n_classes", args.spec.n_classes},
                              {"sampling_rate_hz", args.spec.sampling_rate_hz},
                              {"seed", args.spec.seed},
                              {"class_separation", args.spec.class_separation},
                              {"subject_shift", args.spec.subject_shift}};
  write_text(meta_sidecar_path(args.out), meta.dump(2) + "\n");
  std::cout << "wrote " << args.out << ": " << ds.samples.size() << " samples, C="
            << ds.n_channels << " T=" << ds.n_timesteps << " classes=" << ds.n_classes
            << " rate=" << ds.sampling_rate_hz << "Hz seed=" << args.spec.seed << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::string protocol = "intra";
  int folds = 5;
  std::uint64_t seed = 2026;
  int epochs = 200;
  int batch = 32;
  double lr = 1e-4;
  double weight_decay = 0.01;
  int jobs = 1;
  bool dry_run = false;
  bool zscore = false;
  ModelFlags model;
};

dgn::CvRunConfig make_cv_config(const TrainArgs& args, const dgn::EegDataset& ds) {
  dgn::CvRunConfig cv;
  cv.model = args.model.to_config(ds);
  cv.protocol = dgn::protocol_from_name(args.protocol);
  cv.folds = args.folds;
  cv.jobs = args.jobs;
  cv.run.epochs = args.epochs;
  cv.run.batch_size = args.batch;
  cv.run.master_seed = args.seed;
  cv.run.adamw.lr = args.lr;
  cv.run.adamw.weight_decay = args.weight_decay;
  return cv;
}

void write_cv_outputs(const std::string& out_dir, const dgn::CvRunConfig& cv,
                      const dgn::EegDataset& ds, const dgn::DatasetInfo& info,
                      dgn::CvResult& result) {
  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "manifest.json").string(),
             dgn::manifest_json(cv, ds, info, result, kToolVersion));
  for (std::size_t f = 0; f < result.folds.size(); ++f) {
    const std::string base = "fold" + std::to_string(f);
    write_text((fs::path(out_dir) / (base + ".jsonl")).string(),
               dgn::train_log_jsonl(result.folds[f].log));
    dgn::save_params(result.folds[f].best_params, cv.model,
                     (fs::path(out_dir) / (base + ".dgnw")).string());
  }
}

void print_summary(const dgn::CvSummary& s) {
  auto pct = [](const dgn::MetricStat& m) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * m.mean << " +- " << 100.0 * m.std;
    return os.str();
  };
  std::cout << "acc  " << pct(s.accuracy) << "\n"
            << "prec " << pct(s.macro_precision) << "\n"
            << "rec  " << pct(s.macro_recall) << "\n"
            << "f1   " << pct(s.macro_f1) << "\n";
}

int cmd_train(const TrainArgs& args) {
  dgn::EegDataset ds = dgn::zscore_per_channel(dgn::load_dataset(args.data), args.zscore);
  if (dgn::protocol_from_name(args.protocol) == dgn::Protocol::kInter &&
      ds.subject_ids().size() < 2) {
    throw std::invalid_argument("inter-subject protocol needs >= 2 subjects");
  }
  dgn::CvRunConfig cv = make_cv_config(args, ds);
  cv.model.validate();

  if (args.dry_run) {
    dgn::FoldPlan plan = cv.protocol == dgn::Protocol::kIntra
                             ? dgn::make_intra_folds(ds, cv.folds, args.seed)
                             : dgn::make_inter_folds(ds, cv.folds, args.seed);
    std::cout << "dry run: protocol=" << args.protocol << " folds=" << cv.folds
              << " epochs=" << args.epochs << " batch=" << args.batch << " lr=" << args.lr
              << " seed=" << args.seed << "\n";
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
      std::cout << "fold " << f << ": train=" << plan.folds[f].train_idx.size()
                << " val=" << plan.folds[f].val_idx.size()
                << " test=" << plan.folds[f].test_idx.size() << "\n";
    }
    return 0;
  }

  dgn::DatasetInfo info{args.data, dgn::file_fingerprint(args.data)};
  dgn::CvResult result = dgn::run_cv(ds, cv);
  if (!args.out.empty()) write_cv_outputs(args.out, cv, ds, info, result);
  print_summary(result.summary);
  return 0;
}

struct EvalArgs {
  std::string params;
  std::string data;
  std::string format = "table";
  std::string out;
  bool zscore = false;
};

int cmd_eval(const EvalArgs& args) {
  if (!fs::exists(args.params)) {
    throw std::runtime_error("params file not found: " + args.params);
  }
  dgn::ModelConfig config;
  dgn::ModelParams params = dgn::load_params(args.params, &config);
  dgn::EegDataset ds = dgn::zscore_per_channel(dgn::load_dataset(args.data), args.zscore);
  if (ds.n_channels != config.n_channels || ds.n_timesteps != config.n_timesteps ||
      ds.n_classes != config.n_classes) {
    throw dgn::FormatError("dataset dims do not match the parameter file config", 12);
  }
  std::vector<int> idx(ds.samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  dgn::EvalResult ev = dgn::evaluate(params, config, ds, idx);
  std::vector<int> truth;
  for (const dgn::EegSample& s : ds.samples) truth.push_back(s.label);
  dgn::MetricsReport rep = dgn::report(dgn::confusion(truth, ev.predictions, ds.n_classes));
  const std::string json = dgn::metrics_report_json(rep) + "\n";
  if (args.format == "json") {
    std::cout << json;
  } else if (args.format == "table") {
    std::cout << std::fixed << std::setprecision(4) << "acc  " << rep.accuracy << "\n"
              << "prec " << rep.macro_precision << "\n"
              << "rec  " << rep.macro_recall << "\n"
              << "f1   " << rep.macro_f1 << "\n"
              << "loss " << ev.mean_loss << "\n";
  } else {
    throw std::invalid_argument("--format must be json or table");
  }
  if (!args.out.empty()) write_text(args.out, json);
  return 0;
}

struct AblateArgs {
  TrainArgs train;
  std::string axis;
  std::string values;
};

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_ablate(const AblateArgs& args) {
  dgn::EegDataset ds = dgn::zscore_per_channel(dgn::load_dataset(args.train.data),
                                               args.train.zscore);
  std::vector<std::string> values = split_csv(args.values);
  if (args.axis == "module" && values.empty()) {
    values = {"mlp_only", "delta_mlp", "gtc_mlp", "full"};
  }
  if (values.empty()) throw std::invalid_argument("--values is required for this axis");

  ordered_json table = ordered_json::array();
  std::cout << std::left << std::setw(12) << args.axis << "acc(mean +- std)\n";
  for (const std::string& value : values) {
    TrainArgs cell = args.train;
    if (args.axis == "kernel") {
      const int k = std::stoi(value);
      if (k < 1 || k % 2 == 0) {
        throw std::invalid_argument("kernel values must be odd, got " + value);
      }
      cell.model.kernel = k;
    } else if (args.axis == "step") {
      const int s = std::stoi(value);
      if (s < 1) throw std::invalid_argument("step values must be >= 1, got " + value);
      cell.model.step = s;
    } else if (args.axis == "module") {
      cell.model.variant = value;  // validated by variant_from_name below
    } else {
      throw std::invalid_argument("--axis must be module, kernel, or step");
    }
    dgn::CvRunConfig cv = make_cv_config(cell, ds);
    cv.model.validate();
    dgn::CvResult result = dgn::run_cv(ds, cv);
    std::ostringstream row;
    row << std::fixed << std::setprecision(2) << 100.0 * result.summary.accuracy.mean << " +- "
        << 100.0 * result.summary.accuracy.std;
    std::cout << std::left << std::setw(12) << value << row.str() << "\n";
    table.push_back({{"value", value},
                     {"summary", ordered_json::parse(dgn::cv_summary_json(result.summary))}});
    if (!cell.out.empty()) {
      dgn::DatasetInfo info{cell.data, dgn::file_fingerprint(cell.data)};
      write_cv_outputs((fs::path(cell.out) / (args.axis + "_" + value)).string(), cv, ds, info,
                       result);
    }
  }
  if (!args.train.out.empty()) {
    fs::create_directories(args.train.out);
    ordered_json doc;
    doc["axis"] = args.axis;
    doc["cells"] = table;
    write_text((fs::path(args.train.out) / "ablation.json").string(), doc.dump(2) + "\n");
  }
  return 0;
}

void add_train_flags(CLI::App* cmd, TrainArgs& args, bool data_required) {
  auto* d = cmd->add_option("--data", args.data, "EEGD dataset path");
  if (data_required) d->required();
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--protocol", args.protocol, "intra|inter");
  cmd->add_option("--folds", args.folds, "cross-validation folds");
  cmd->add_option("--seed", args.seed, "master seed");
  cmd->add_option("--epochs", args.epochs, "training epochs per fold");
  cmd->add_option("--batch", args.batch, "batch size");
  cmd->add_option("--lr", args.lr, "AdamW learning rate");
  cmd->add_option("--weight-decay", args.weight_decay, "AdamW decoupled weight decay");
  cmd->add_option("--jobs", args.jobs, "parallel fold workers");
  cmd->add_flag("--zscore", args.zscore, "standardize each channel (off: raw signals)");
  add_model_flags(cmd, args.model);
  cmd->set_config("--config", "", "flat key=value config file; flags win");
}

}  // namespace

int main(int argc, char** argv) {
#if defined(DGN_HAVE_MALLOPT) && defined(M_MMAP_MAX)
  // Keep large activation buffers inside the heap instead of mmap/munmap
  // round trips; training reallocates tens of MB per batch.
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
  CLI::App app{"DeltaGateNet EEG fatigue classifier"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic EEGD dataset");
  gen_cmd->add_option("--preset", gen.preset, "seedvig-like|sadt-like");
  gen_cmd->add_option("--out", gen.out, "output EEGD path")->required();
  gen_cmd->add_option("--seed", gen.spec.seed, "generator seed");
  auto* g_sub = gen_cmd->add_option("--subjects", gen.spec.n_subjects, "subject count");
  auto* g_sps = gen_cmd->add_option("--samples-per-subject", gen.spec.samples_per_subject, "");
  auto* g_ch = gen_cmd->add_option("--channels", gen.spec.n_channels, "");
  auto* g_ts = gen_cmd->add_option("--timesteps", gen.spec.n_timesteps, "");
  auto* g_cl = gen_cmd->add_option("--classes", gen.spec.n_classes, "");
  auto* g_rate = gen_cmd->add_option("--rate", gen.spec.sampling_rate_hz, "sampling rate Hz");
  gen_cmd->add_option("--class-separation", gen.spec.class_separation, "");
  gen_cmd->add_option("--subject-shift", gen.spec.subject_shift, "");
  gen_cmd->add_option("--name", gen.spec.name, "dataset name");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "k-fold cross-validated training");
  add_train_flags(train_cmd, train_args, /*data_required=*/true);
  train_cmd->add_flag("--dry-run", train_args.dry_run, "print the fold plan and exit");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate saved params on a dataset");
  eval_cmd->add_option("--params", eval_args.params, "DGNW parameter file")->required();
  eval_cmd->add_option("--data", eval_args.data, "EEGD dataset path")->required();
  eval_cmd->add_option("--format", eval_args.format, "json|table");
  eval_cmd->add_option("--out", eval_args.out, "write metrics JSON here");
  eval_cmd->add_flag("--zscore", eval_args.zscore, "standardize each channel");

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "sweep one axis with identical CV protocol");
  ablate_cmd->add_option("--axis", ablate_args.axis, "module|kernel|step")->required();
  ablate_cmd->add_option("--values", ablate_args.values, "comma-separated values");
  add_train_flags(ablate_cmd, ablate_args.train, /*data_required=*/true);

  auto* selfcheck_cmd = app.add_subcommand("selfcheck", "run the built-in verification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) {
      // Preset defaults first, explicit flags win.
      dgn::SyntheticSpec flagged = gen.spec;
      apply_preset(gen.spec, gen.preset);
      if (g_sub->count()) gen.spec.n_subjects = flagged.n_subjects;
      if (g_sps->count()) gen.spec.samples_per_subject = flagged.samples_per_subject;
      if (g_ch->count()) gen.spec.n_channels = flagged.n_channels;
      if (g_ts->count()) gen.spec.n_timesteps = flagged.n_timesteps;
      if (g_cl->count()) gen.spec.n_classes = flagged.n_classes;
      if (g_rate->count()) gen.spec.sampling_rate_hz = flagged.sampling_rate_hz;
      return cmd_gen_data(gen);
    }
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (eval_cmd->parsed()) return cmd_eval(eval_args);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_args);
    if (selfcheck_cmd->parsed()) return dgn::run_selfcheck(std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const dgn::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitCheckFailure;
}
