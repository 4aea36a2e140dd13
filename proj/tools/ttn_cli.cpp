// Command-line front end: trains one-against-all TTN classifiers, evaluates
// them, and emits the quantum diagnostics and per-layer embedding exports.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>
#include <vector>

#include "ttn/analysis.hpp"
#include "ttn/csv.hpp"
#include "ttn/data_io.hpp"
#include "ttn/ensemble.hpp"
#include "ttn/errors.hpp"
#include "ttn/runtime.hpp"
#include "ttn/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
  std::string dataset = "mnist";  // mnist | cifar10
  std::string data_dir;
  std::vector<int> classes;       // empty = all ten
  std::size_t samples_per_class = 0;
  std::size_t d = 3;
  std::size_t chi = 3;
  std::vector<int> chi_per_class;
  std::size_t side = 0;           // 0 = dataset default (mnist 16, cifar10 32)
  std::size_t sweeps = 20;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  std::string out_dir = "ttn_out";
  unsigned threads = 0;
  std::string split = "test";     // eval / export data split

  std::size_t effective_side() const {
    if (side != 0) return side;
    return dataset == "cifar10" ? 32 : 16;
  }

  std::vector<int> effective_classes() const {
    if (!classes.empty()) return classes;
    return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  }
};

void add_common_options(CLI::App* cmd, RunConfig& cfg, bool with_split) {
  cmd->set_config("--config", "", "key=value config file; command-line flags win");
  cmd->add_option("--dataset", cfg.dataset, "dataset kind")
      ->check(CLI::IsMember({"mnist", "cifar10"}));
  cmd->add_option("--data-dir", cfg.data_dir, "directory holding the dataset files")
      ->envname("TTN_DATA_DIR");
  cmd->add_option("--classes", cfg.classes, "class ids (2 ids = one binary model)")
      ->delimiter(',');
  cmd->add_option("--samples-per-class", cfg.samples_per_class,
                  "cap on samples per class (0 = all)");
  cmd->add_option("--d", cfg.d, "input bond dimension (feature map length)");
  cmd->add_option("--chi", cfg.chi, "virtual bond dimension");
  cmd->add_option("--chi-per-class", cfg.chi_per_class,
                  "per-class virtual bonds, parallel to --classes")
      ->delimiter(',');
  cmd->add_option("--side", cfg.side, "image side after rescaling (0 = dataset default)");
  cmd->add_option("--sweeps", cfg.sweeps, "maximum training sweeps");
  cmd->add_option("--tol", cfg.tol, "relative cost-change convergence threshold");
  cmd->add_option("--seed", cfg.seed, "base seed for model initialization");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--threads", cfg.threads, "worker thread cap (0 = all cores)");
  if (with_split) {
    cmd->add_option("--split", cfg.split, "data split to read")
        ->check(CLI::IsMember({"train", "test"}));
  }
}

ttn::RawImageSet load_raw(const RunConfig& cfg, const std::string& split) {
  if (cfg.data_dir.empty()) {
    throw ttn::ConfigError("no data directory: pass --data-dir or set TTN_DATA_DIR");
  }
  const fs::path dir = cfg.data_dir;
  if (cfg.dataset == "mnist") {
    const auto images = dir / (split == "train" ? "train-images-idx3-ubyte"
                                                : "t10k-images-idx3-ubyte");
    const auto labels = dir / (split == "train" ? "train-labels-idx1-ubyte"
                                                : "t10k-labels-idx1-ubyte");
    return ttn::load_mnist_idx(images.string(), labels.string());
  }
  std::vector<std::string> batches;
  if (split == "train") {
    for (int b = 1; b <= 5; ++b) {
      batches.push_back((dir / ("data_batch_" + std::to_string(b) + ".bin")).string());
    }
  } else {
    batches.push_back((dir / "test_batch.bin").string());
  }
  return ttn::load_cifar10(batches);
}

ttn::Dataset load_dataset(const RunConfig& cfg, const std::string& split,
                          const std::vector<int>& classes, std::optional<int> binary_positive) {
  auto raw = load_raw(cfg, split);
  ttn::DatasetOptions opts;
  opts.d = cfg.d;
  opts.side = cfg.effective_side();
  opts.class_filter = classes;
  opts.samples_per_class = cfg.samples_per_class;
  opts.binary_positive = binary_positive;
  return ttn::build_dataset(raw, opts);
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

void write_manifest(const RunConfig& cfg, const std::string& command) {
  std::ofstream out(fs::path(cfg.out_dir) / "manifest.txt");
  if (!out) throw ttn::IoError("cannot write manifest in " + cfg.out_dir);
  out << "version=" << kVersion << '\n'
      << "command=" << command << '\n'
      << "dataset=" << cfg.dataset << '\n'
      << "data-dir=" << cfg.data_dir << '\n'
      << "classes=" << join_ints(cfg.effective_classes()) << '\n'
      << "samples-per-class=" << cfg.samples_per_class << '\n'
      << "d=" << cfg.d << '\n'
      << "chi=" << cfg.chi << '\n'
      << "chi-per-class=" << join_ints(cfg.chi_per_class) << '\n'
      << "side=" << cfg.effective_side() << '\n'
      << "sweeps=" << cfg.sweeps << '\n'
      << "tol=" << ttn::csv_real(cfg.tol) << '\n'
      << "seed=" << cfg.seed << '\n'
      << "threads=" << cfg.threads << '\n';
}

void write_trace_file(const ttn::SweepTrace& trace, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ttn::IoError("cannot write " + path.string());
  ttn::write_trace_csv(trace, out);
}

int cmd_train(const RunConfig& cfg) {
  ttn::set_max_threads(cfg.threads);
  const auto classes = cfg.effective_classes();
  if (classes.size() < 2) throw ttn::ConfigError("--classes needs at least 2 ids");
  if (!cfg.chi_per_class.empty() && cfg.chi_per_class.size() != classes.size()) {
    throw ttn::ConfigError("--chi-per-class must list one bond per class");
  }
  fs::create_directories(cfg.out_dir);

  ttn::TrainConfig train_cfg;
  train_cfg.max_sweeps = cfg.sweeps;
  train_cfg.cost_tolerance = cfg.tol;
  train_cfg.seed = cfg.seed;

  if (classes.size() == 2) {
    // One binary model: the first listed class is the yes answer.
    auto data = load_dataset(cfg, "train", classes, classes[0]);
    const auto layout = ttn::TtnLayout::make(cfg.effective_side(), cfg.d, cfg.chi, 2);
    auto model = ttn::TtnModel::random(layout, cfg.seed);
    auto trace = ttn::train(model, data, train_cfg);

    const std::string pair =
        std::to_string(classes[0]) + "_vs_" + std::to_string(classes[1]);
    model.save((fs::path(cfg.out_dir) / ("model_" + pair + ".ttnm")).string());
    write_trace_file(trace, fs::path(cfg.out_dir) / ("trace_" + pair + ".csv"));
    write_manifest(cfg, "train");
    std::cout << "trained 1 binary model (" << classes[0] << " vs " << classes[1]
              << "), final cost " << trace.back().cost << ", train accuracy "
              << trace.back().train_accuracy << '\n';
    return kExitOk;
  }

  auto data = load_dataset(cfg, "train", classes, std::nullopt);
  std::vector<ttn::ClassTrainSpec> specs =
      ttn::uniform_specs(classes, ttn::TtnLayout::make(cfg.effective_side(), cfg.d, cfg.chi, 2),
                         train_cfg);
  for (std::size_t i = 0; i < cfg.chi_per_class.size(); ++i) {
    specs[i].layout = ttn::TtnLayout::make(cfg.effective_side(), cfg.d,
                                           static_cast<std::size_t>(cfg.chi_per_class[i]), 2);
  }
  auto result = ttn::train_one_vs_all(data, specs);
  for (std::size_t i = 0; i < result.ensemble.size(); ++i) {
    const int id = result.ensemble.members[i].class_id;
    result.ensemble.members[i].model.save(
        (fs::path(cfg.out_dir) / ("model_" + std::to_string(id) + ".ttnm")).string());
    write_trace_file(result.traces[i],
                     fs::path(cfg.out_dir) / ("trace_" + std::to_string(id) + ".csv"));
    std::cout << "class " << id << ": final cost " << result.traces[i].back().cost
              << ", train accuracy " << result.traces[i].back().train_accuracy << '\n';
  }
  write_manifest(cfg, "train");
  return kExitOk;
}

struct NamedModel {
  int class_id = 0;
  std::optional<int> versus;  // set for binary model files
  ttn::TtnModel model;
};

std::vector<NamedModel> load_models(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.path().extension() == ".ttnm") files.push_back(entry.path().string());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ttn::ConfigError("no model files given");

  static const std::regex name_pattern("model_(\\d+)(?:_vs_(\\d+))?");
  std::vector<NamedModel> models;
  for (const auto& file : files) {
    std::smatch match;
    const std::string stem = fs::path(file).stem().string();
    NamedModel named;
    if (std::regex_match(stem, match, name_pattern)) {
      named.class_id = std::stoi(match[1]);
      if (match[2].matched) named.versus = std::stoi(match[2]);
    } else {
      throw ttn::ConfigError("cannot read a class id from model file name '" + stem +
                             "'; expected model_<class>.ttnm");
    }
    named.model = ttn::TtnModel::load(file);
    models.push_back(std::move(named));
  }
  return models;
}

int cmd_eval(const RunConfig& cfg, const std::vector<std::string>& model_paths) {
  ttn::set_max_threads(cfg.threads);
  auto models = load_models(model_paths);
  fs::create_directories(cfg.out_dir);

  RunConfig data_cfg = cfg;
  data_cfg.side = models.front().model.layout().side;
  data_cfg.d = models.front().model.layout().d;

  ttn::Evaluation eval;
  if (models.size() == 1) {
    if (!models.front().versus) {
      throw ttn::ConfigError("a single model needs a model_<a>_vs_<b>.ttnm name to know its pair");
    }
    const int positive = models.front().class_id;
    const int negative = *models.front().versus;
    auto data = load_dataset(data_cfg, cfg.split, {positive, negative}, std::nullopt);
    eval = ttn::evaluate_binary(models.front().model, data, positive, negative);
  } else {
    ttn::Ensemble ensemble;
    std::vector<int> classes;
    for (auto& named : models) {
      classes.push_back(named.class_id);
      ensemble.members.push_back({named.class_id, std::move(named.model)});
    }
    ensemble.validate();
    auto data = load_dataset(data_cfg, cfg.split, classes, std::nullopt);
    eval = ttn::evaluate(ensemble, data);
  }

  ttn::print_evaluation(eval, std::cout);
  std::ofstream out(fs::path(cfg.out_dir) / "eval.csv");
  if (!out) throw ttn::IoError("cannot write eval.csv in " + cfg.out_dir);
  ttn::write_evaluation_csv(eval, out);
  return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, const std::vector<std::string>& model_paths,
                bool heatmap) {
  ttn::set_max_threads(cfg.threads);
  auto models = load_models(model_paths);
  fs::create_directories(cfg.out_dir);

  ttn::Ensemble ensemble;
  std::vector<int> classes;
  for (auto& named : models) {
    classes.push_back(named.class_id);
    ensemble.members.push_back({named.class_id, std::move(named.model)});
  }
  ensemble.validate();

  if (ensemble.size() >= 2) {
    const Eigen::MatrixXd fidelity = ttn::fidelity_matrix(ensemble);
    std::ofstream out(fs::path(cfg.out_dir) / "fidelity.csv");
    if (!out) throw ttn::IoError("cannot write fidelity.csv in " + cfg.out_dir);
    ttn::write_fidelity_csv(fidelity, classes, out);
    if (heatmap) ttn::print_fidelity_heatmap(fidelity, classes, std::cout);
  } else {
    std::cerr << "warning: fidelity matrix needs at least 2 models; emitting entanglement only\n";
  }

  const auto report = ttn::entanglement_report(ensemble);
  std::ofstream out(fs::path(cfg.out_dir) / "entanglement.csv");
  if (!out) throw ttn::IoError("cannot write entanglement.csv in " + cfg.out_dir);
  ttn::write_entanglement_csv(report, out);
  return kExitOk;
}

int cmd_export_embeddings(const RunConfig& cfg, const std::string& model_path,
                          std::vector<int> layers) {
  ttn::set_max_threads(cfg.threads);
  auto model = ttn::TtnModel::load(model_path);
  fs::create_directories(cfg.out_dir);

  RunConfig data_cfg = cfg;
  data_cfg.side = model.layout().side;
  data_cfg.d = model.layout().d;
  auto data = load_dataset(data_cfg, cfg.split, cfg.effective_classes(), std::nullopt);

  const std::size_t top = model.layout().num_layers;
  if (layers.empty()) {
    for (std::size_t k = 0; k <= top; ++k) layers.push_back(static_cast<int>(k));
  }
  for (int k : layers) {
    if (k < 0 || static_cast<std::size_t>(k) > top) {
      throw ttn::ConfigError("layer " + std::to_string(k) + " out of range 0.." +
                             std::to_string(top));
    }
  }

  std::vector<std::ofstream> files;
  for (int k : layers) {
    files.emplace_back(fs::path(cfg.out_dir) / ("embeddings_layer" + std::to_string(k) + ".csv"));
    if (!files.back()) throw ttn::IoError("cannot write embeddings CSV in " + cfg.out_dir);
  }

  bool headers_written = false;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto reps = model.layer_representations(data.samples[n]);
    if (!headers_written) {
      for (std::size_t i = 0; i < layers.size(); ++i) {
        files[i] << "sample,label";
        const auto& rep = reps[static_cast<std::size_t>(layers[i])];
        for (std::size_t v = 0; v < rep.values.size(); ++v) files[i] << ",v" << v;
        files[i] << '\n';
      }
      headers_written = true;
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& rep = reps[static_cast<std::size_t>(layers[i])];
      files[i] << n << ',' << data.labels[n];
      for (double v : rep.values) files[i] << ',' << ttn::csv_real(v);
      files[i] << '\n';
    }
  }
  std::cout << "exported " << data.size() << " samples for " << layers.size() << " layers\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unitary tree-tensor-network image classifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunConfig cfg;
  std::vector<std::string> model_paths;
  std::string model_path;
  std::vector<int> layers;
  bool heatmap = false;

  auto* train = app.add_subcommand("train", "train one-against-all models");
  add_common_options(train, cfg, false);

  auto* eval = app.add_subcommand("eval", "evaluate models on a data split");
  add_common_options(eval, cfg, true);
  eval->add_option("models", model_paths, "model files or a directory of .ttnm files")
      ->required();

  auto* analyze = app.add_subcommand("analyze", "fidelity matrix and entanglement report");
  add_common_options(analyze, cfg, false);
  analyze->add_option("models", model_paths, "model files or a directory of .ttnm files")
      ->required();
  analyze->add_flag("--heatmap", heatmap, "print a text heatmap of the fidelity matrix");

  auto* embed = app.add_subcommand("export-embeddings", "per-layer renormalized vectors as CSV");
  add_common_options(embed, cfg, true);
  embed->add_option("model", model_path, "model file")->required();
  embed->add_option("--layers", layers, "layers to export (default: all)")->delimiter(',');
  embed->get_option("--split")->default_val("train");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg, model_paths);
    if (analyze->parsed()) return cmd_analyze(cfg, model_paths, heatmap);
    if (embed->parsed()) return cmd_export_embeddings(cfg, model_path, layers);
  } catch (const ttn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ttn::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ttn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ttn::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitConfig;
}
