#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = TTN_CLI_PATH;

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "ttn_cli_test.log";
  const std::string command = kCli + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

void be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

// Synthetic three-class 8x8 digit stand-ins: dark images, bright images, and
// images bright only in the upper half. Classes 0/1/2.
void write_idx_pair(const fs::path& images_path, const fs::path& labels_path,
                    std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(0, 40);
  std::vector<std::uint8_t> images, labels;
  const std::uint32_t count = static_cast<std::uint32_t>(3 * per_class);
  be32(images, 0x803);
  be32(images, count);
  be32(images, 8);
  be32(images, 8);
  be32(labels, 0x801);
  be32(labels, count);
  for (std::size_t n = 0; n < count; ++n) {
    const int cls = static_cast<int>(n % 3);
    labels.push_back(static_cast<std::uint8_t>(cls));
    for (std::size_t row = 0; row < 8; ++row) {
      for (std::size_t col = 0; col < 8; ++col) {
        int value = 0;
        if (cls == 0) value = noise(rng);
        if (cls == 1) value = 255 - noise(rng);
        if (cls == 2) value = row < 4 ? 255 - noise(rng) : noise(rng);
        images.push_back(static_cast<std::uint8_t>(value));
      }
    }
  }
  std::ofstream(images_path, std::ios::binary)
      .write(reinterpret_cast<const char*>(images.data()),
             static_cast<std::streamsize>(images.size()));
  std::ofstream(labels_path, std::ios::binary)
      .write(reinterpret_cast<const char*>(labels.data()),
             static_cast<std::streamsize>(labels.size()));
}

struct CliFixture {
  fs::path root;
  fs::path data_dir;

  CliFixture() {
    root = fs::temp_directory_path() / "ttn_cli_tests";
    fs::remove_all(root);
    data_dir = root / "data";
    fs::create_directories(data_dir);
    write_idx_pair(data_dir / "train-images-idx3-ubyte", data_dir / "train-labels-idx1-ubyte",
                   30, 1001);
    write_idx_pair(data_dir / "t10k-images-idx3-ubyte", data_dir / "t10k-labels-idx1-ubyte",
                   12, 2002);
  }

  std::string common(const std::string& out) const {
    return "--dataset mnist --data-dir " + data_dir.string() + " --side 4 --d 2 --chi 2 " +
           "--sweeps 4 --seed 7 --out " + (root / out).string();
  }
};

std::vector<std::uint8_t> file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

// Extracts column `index` of the last CSV data row.
double last_row_value(const fs::path& csv, std::size_t index) {
  std::ifstream in(csv);
  std::string line, last;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  std::stringstream ss(last);
  std::string cell;
  for (std::size_t i = 0; i <= index; ++i) std::getline(ss, cell, ',');
  return std::stod(cell);
}

}  // namespace

TEST_CASE("cli: binary training run produces model, trace, and manifest") {
  CliFixture fx;
  auto result = run("train " + fx.common("run_binary") + " --classes 0,1");
  CHECK(result.exit_code == 0);

  const fs::path out = fx.root / "run_binary";
  CHECK(fs::exists(out / "model_0_vs_1.ttnm"));
  CHECK(fs::exists(out / "manifest.txt"));
  REQUIRE(fs::exists(out / "trace_0_vs_1.csv"));

  // Cost column is non-increasing across sweeps.
  std::ifstream trace(out / "trace_0_vs_1.csv");
  std::string line;
  std::getline(trace, line);
  CHECK(line == "sweep,cost,train_accuracy,seconds");
  double prev = 1e300;
  while (std::getline(trace, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    std::getline(ss, cell, ',');
    const double cost = std::stod(cell);
    CHECK(cost <= prev + 1e-10);
    prev = cost;
  }
}

TEST_CASE("cli: reruns with the same seed write byte-identical model files") {
  CliFixture fx;
  REQUIRE(run("train " + fx.common("rerun_a") + " --classes 0,1").exit_code == 0);
  REQUIRE(run("train " + fx.common("rerun_b") + " --classes 0,1 --threads 1").exit_code == 0);
  const auto a = file_bytes(fx.root / "rerun_a" / "model_0_vs_1.ttnm");
  const auto b = file_bytes(fx.root / "rerun_b" / "model_0_vs_1.ttnm");
  REQUIRE(!a.empty());
  CHECK(a == b);
}

TEST_CASE("cli: multi-class training writes one model per class") {
  CliFixture fx;
  auto result = run("train " + fx.common("run_multi") + " --classes 0,1,2");
  CHECK(result.exit_code == 0);
  for (int c : {0, 1, 2}) {
    CHECK(fs::exists(fx.root / "run_multi" / ("model_" + std::to_string(c) + ".ttnm")));
    CHECK(fs::exists(fx.root / "run_multi" / ("trace_" + std::to_string(c) + ".csv")));
  }
}

TEST_CASE("cli: eval on the training split reproduces the final trace accuracy") {
  CliFixture fx;
  REQUIRE(run("train " + fx.common("run_eval") + " --classes 0,1").exit_code == 0);
  const fs::path out = fx.root / "run_eval";
  auto result = run("eval " + out.string() + " " + fx.common("run_eval") +
                    " --classes 0,1 --split train");
  CHECK(result.exit_code == 0);
  CHECK(result.output.find("accuracy:") != std::string::npos);

  const double trace_acc = last_row_value(out / "trace_0_vs_1.csv", 2);
  const double eval_acc = last_row_value(out / "eval.csv", 1);
  CHECK(eval_acc == trace_acc);
}

TEST_CASE("cli: eval on the held-out split classifies the separable toy set") {
  CliFixture fx;
  REQUIRE(run("train " + fx.common("run_test_eval") + " --classes 0,1").exit_code == 0);
  const fs::path out = fx.root / "run_test_eval";
  auto result = run("eval " + out.string() + " " + fx.common("run_test_eval") + " --classes 0,1");
  CHECK(result.exit_code == 0);
  CHECK(last_row_value(out / "eval.csv", 1) == 1.0);  // aggregate accuracy
}

TEST_CASE("cli: analyze emits fidelity and entanglement CSVs") {
  CliFixture fx;
  REQUIRE(run("train " + fx.common("run_analyze") + " --classes 0,1,2").exit_code == 0);
  const fs::path out = fx.root / "run_analyze";
  auto result = run("analyze " + out.string() + " --out " + out.string() + " --heatmap");
  CHECK(result.exit_code == 0);
  REQUIRE(fs::exists(out / "fidelity.csv"));
  REQUIRE(fs::exists(out / "entanglement.csv"));

  std::ifstream fidelity(out / "fidelity.csv");
  std::string header;
  std::getline(fidelity, header);
  CHECK(header == "class,class_0,class_1,class_2");
  // Unit diagonal in the first data row.
  std::string row;
  std::getline(fidelity, row);
  std::stringstream ss(row);
  std::string cell;
  std::getline(ss, cell, ',');
  std::getline(ss, cell, ',');
  CHECK(std::stod(cell) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("cli: export-embeddings writes one CSV per layer with the right widths") {
  CliFixture fx;
  REQUIRE(run("train " + fx.common("run_embed") + " --classes 0,1").exit_code == 0);
  const fs::path out = fx.root / "run_embed";
  auto result = run("export-embeddings " + (out / "model_0_vs_1.ttnm").string() + " " +
                    fx.common("run_embed") + " --classes 0,1 --layers 0,2");
  CHECK(result.exit_code == 0);

  auto count_columns = [](const fs::path& path) {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    return std::count(header.begin(), header.end(), ',');
  };
  // side=4, d=2: layer 0 width 4*4*2 = 32; top layer width = D = 2.
  CHECK(count_columns(out / "embeddings_layer0.csv") == 1 + 32);
  CHECK(count_columns(out / "embeddings_layer2.csv") == 1 + 2);

  auto bad = run("export-embeddings " + (out / "model_0_vs_1.ttnm").string() + " " +
                 fx.common("run_embed") + " --classes 0,1 --layers 9");
  CHECK(bad.exit_code == 2);
}

TEST_CASE("cli: usage and data errors map to exit codes 2 and 3") {
  CliFixture fx;
  CHECK(run("train --no-such-flag").exit_code == 2);
  CHECK(run("nonexistent-subcommand").exit_code == 2);
  CHECK(run("train " + fx.common("run_err") + " --classes 0").exit_code == 2);
  CHECK(run("train " + fx.common("run_err") + " --dataset cifar10").exit_code == 3);

  // Mixed input bond dimensions cannot form an ensemble.
  REQUIRE(run("train " + fx.common("mix_a") + " --classes 0,1,2").exit_code == 0);
  REQUIRE(run("train " + fx.common("mix_b") + " --classes 0,1,2 --d 3").exit_code == 0);
  fs::copy_file(fx.root / "mix_b" / "model_2.ttnm", fx.root / "mix_a" / "model_2.ttnm",
                fs::copy_options::overwrite_existing);
  CHECK(run("analyze " + (fx.root / "mix_a").string() + " --out " + (fx.root / "mix_a").string())
            .exit_code == 3);
}

TEST_CASE("cli: config file values are applied and flags win") {
  CliFixture fx;
  const fs::path cfg_path = fx.root / "run.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "dataset=mnist\n"
        << "data-dir=" << fx.data_dir.string() << "\n"
        << "classes=0,1\n"
        << "side=4\n"
        << "d=2\n"
        << "chi=2\n"
        << "sweeps=3\n"
        << "seed=7\n"
        << "out=" << (fx.root / "cfg_out").string() << "\n";
  }
  auto result = run("train --config " + cfg_path.string());
  CHECK(result.exit_code == 0);
  CHECK(fs::exists(fx.root / "cfg_out" / "model_0_vs_1.ttnm"));

  // A flag overrides the config file's output directory.
  auto overridden = run("train --config " + cfg_path.string() + " --out " +
                        (fx.root / "cfg_out2").string());
  CHECK(overridden.exit_code == 0);
  CHECK(fs::exists(fx.root / "cfg_out2" / "model_0_vs_1.ttnm"));

  // The manifest echoes the effective configuration.
  std::ifstream manifest(fx.root / "cfg_out" / "manifest.txt");
  std::stringstream buffer;
  buffer << manifest.rdbuf();
  CHECK(buffer.str().find("classes=0,1") != std::string::npos);
  CHECK(buffer.str().find("seed=7") != std::string::npos);
}
