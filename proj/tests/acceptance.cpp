// Acceptance runner: one PASS / FAIL / SKIP line per criterion.
//
//   acceptance --suite property          criteria 1-6 (seconds)
//   acceptance --suite desk              criteria 7-8 (minutes)
//   acceptance --suite full              criteria 9-11, needs QICNN_FULL_SCALE=1
//   acceptance --suite all
//
// Exit status is 0 when no criterion in the selected suites reports FAIL.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "qicnn/dataset.hpp"
#include "qicnn/network.hpp"
#include "qicnn/parallel.hpp"
#include "qicnn/train.hpp"
#include "qicnn/verify_ops.hpp"

namespace fs = std::filesystem;
using namespace qicnn;

namespace {

// Pinned tolerances and settings.
constexpr double kOracleTol = 1e-10;        // criteria 1, 2
constexpr double kUnitCircleTol = 1e-12;    // criterion 3
constexpr double kGradTol = 1e-4;           // criterion 4
constexpr std::size_t kDeterminismN = 1000; // criterion 6
constexpr std::size_t kOverfitN = 64;       // criterion 7
constexpr std::size_t kOverfitSteps = 500;
constexpr double kOverfitLoss = 0.05;
constexpr std::size_t kCompetenceN = 10000; // criterion 8
constexpr double kCompetenceAcc = 0.970;
constexpr double kFullIiTarget = 0.9965;    // criterion 9
constexpr double kFullClassicalTarget = 0.9950;
constexpr double kFullBand = 0.003;
constexpr std::size_t kCifarTrainN = 10000; // criterion 11
constexpr std::size_t kCifarTestN = 2000;
const std::vector<std::uint64_t> kSeeds = {42, 43, 44};

struct Tally {
  int pass = 0, fail = 0, skip = 0;
};

Tally tally;

void report(int criterion, std::string_view status, const std::string& detail) {
  if (status == "PASS") ++tally.pass;
  if (status == "FAIL") ++tally.fail;
  if (status == "SKIP") ++tally.skip;
  std::cout << "criterion " << std::setw(2) << criterion << "  " << status << "  " << detail << std::endl;
}

void verdict(int criterion, bool ok, const std::string& detail) {
  report(criterion, ok ? "PASS" : "FAIL", detail);
}

void info(const std::string& detail) { std::cout << "              info  " << detail << std::endl; }

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

fs::path scratch_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("qicnn_accept_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool has_mnist(const fs::path& dir) {
  return fs::exists(dir / "train-images-idx3-ubyte") && fs::exists(dir / "t10k-images-idx3-ubyte");
}

// ---------------------------------------------------------------- property

void criterion_1(std::uint64_t seed) {
  const SuiteResult r = verify_complex_conv(seed, 100);
  verdict(1, r.passed() && r.tolerance <= kOracleTol && r.instances == 100,
         "complex_conv2d vs complex-arithmetic oracle: " + std::to_string(r.instances) +
             " instances, max abs err " + sci(r.max_error) + " (tol " + sci(kOracleTol) + ")");
}

void criterion_2(std::uint64_t seed) {
  const SuiteResult r = verify_neuron(seed, 100);
  verdict(2, r.passed() && r.tolerance <= kOracleTol && r.instances == 100,
         "qi_neuron_layer vs neuron formula (D<=16, M<=8): " + std::to_string(r.instances) +
             " instances, max abs err " + sci(r.max_error) + " (tol " + sci(kOracleTol) + ")");
}

void criterion_3(std::uint64_t seed) {
  const auto suites = verify_unit_circle(seed, 1000);
  bool ok = !suites.empty();
  double worst = 0.0;
  std::string parts;
  for (const auto& s : suites) {
    ok = ok && s.passed() && s.tolerance <= kUnitCircleTol && s.instances == 1000;
    worst = std::max(worst, s.max_error);
    parts += (parts.empty() ? "" : ", ") + s.name + " " + sci(s.max_error);
  }
  verdict(3, ok, "1000 angles each: " + parts + " (tol " + sci(kUnitCircleTol) + ")");
}

void criterion_4(std::uint64_t seed) {
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0, skipped = 0;
  auto take = [&](const std::string& name, const GradCheckReport& r) {
    checked += r.num_checked;
    skipped += r.num_skipped;
    if (r.num_checked == 0 || r.max_rel_error > kGradTol) ok = false;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = name;
    }
  };
  for (const auto& [name, r] : layer_gradchecks(seed)) take(name, r);
  for (NetworkVariant v : {NetworkVariant::kI3, NetworkVariant::kII, NetworkVariant::kF}) {
    take("tiny " + std::string(to_string(v)), network_gradcheck(v, true, seed));
  }
  NetworkOptions complex_fc;
  complex_fc.f_complex_fc = true;
  take("tiny f (complex fc)", network_gradcheck(NetworkVariant::kF, true, seed, LossKind::kCrossEntropy, complex_fc));
  verdict(4, ok,
         "layers + tiny i3/ii/f: max rel err " + sci(worst) + " at " + worst_name + ", " +
             std::to_string(checked) + " coords checked, " + std::to_string(skipped) +
             " skipped at kinks (tol " + sci(kGradTol) + ")");
}

void criterion_5() {
  bool ok = true;
  std::string detail;
  for (DatasetKind d : {DatasetKind::kMnist, DatasetKind::kCifar10}) {
    std::vector<std::size_t> counts;
    for (NetworkVariant v : kAllVariants) counts.push_back(build(v, d, 1).parameter_count());
    const bool same = std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c == counts[0]; });
    ok = ok && same;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(d)) + " " +
              (same ? std::to_string(counts[0]) : "MISMATCH");
  }
  verdict(5, ok, "parameter counts across six variants: " + detail);
}

void criterion_6(const fs::path& data_dir) {
  if (!has_mnist(data_dir)) {
    report(6, "SKIP", "no MNIST IDX files in " + data_dir.string());
    return;
  }
  const fs::path root = scratch_dir("c6");
  std::vector<std::string> csv;
  for (int run = 0; run < 2; ++run) {
    RunConfig cfg;
    cfg.variant = NetworkVariant::kII;
    cfg.data_dir = data_dir.string();
    cfg.epochs = 1;
    cfg.subset_n = kDeterminismN;
    cfg.seed = 42;
    cfg.threads = 1;
    cfg.wall_clock = false;
    cfg.out_dir = (root / ("run" + std::to_string(run))).string();
    train(cfg);
    std::ifstream in(fs::path(cfg.out_dir) / "metrics.csv", std::ios::binary);
    std::stringstream text;
    text << in.rdbuf();
    csv.push_back(text.str());
  }
  fs::remove_all(root);
  verdict(6, !csv[0].empty() && csv[0] == csv[1],
         "two seeded 1-thread 1-epoch ii runs on " + std::to_string(kDeterminismN) + " images: metrics.csv " +
             (csv[0] == csv[1] ? "bit-identical" : "DIFFERS") + " (" + std::to_string(csv[0].size()) + " bytes)");
}

// -------------------------------------------------------------------- desk

// Lowest step index (1-based) at which the batch loss drops below the
// threshold, or 0.
std::size_t first_step_below(const MetricsLog& log, double threshold, double& min_loss) {
  min_loss = INFINITY;
  std::size_t hit = 0;
  for (const auto& row : log.rows) {
    min_loss = std::min(min_loss, row.train_loss);
    if (hit == 0 && row.train_loss < threshold) hit = row.step;
  }
  return hit;
}

MetricsLog overfit_run(NetworkVariant v, const Dataset& train_small, LossKind loss) {
  Network net = build(v, DatasetKind::kMnist, 42);
  TrainOptions opt;
  opt.epochs = kOverfitSteps;
  opt.batch_size = kOverfitN;
  opt.seed = 42;
  opt.loss = loss;
  opt.wall_clock = false;
  opt.max_steps = kOverfitSteps;
  opt.evaluate_each_epoch = false;
  return train_network(net, train_small, nullptr, opt);
}

void criterion_7(const fs::path& data_dir) {
  if (!has_mnist(data_dir)) {
    report(7, "SKIP", "no MNIST IDX files in " + data_dir.string());
    return;
  }
  const Dataset small = subset(load_mnist(data_dir, Split::kTrain), kOverfitN, 42);
  bool ok = true;
  std::string detail, failed;
  for (NetworkVariant v : kAllVariants) {
    double min_loss = 0.0;
    const MetricsLog log = overfit_run(v, small, LossKind::kCrossEntropy);
    const std::size_t hit = first_step_below(log, kOverfitLoss, min_loss);
    const std::string tag(to_string(v));
    detail += (detail.empty() ? "" : ", ") + tag + " " + (hit ? "step " + std::to_string(hit) : "min " + fmt(min_loss));
    if (hit == 0) {
      ok = false;
      failed += (failed.empty() ? "" : ", ") + tag;
    }
  }
  verdict(7, ok, "xent < " + fmt(kOverfitLoss) + " on " + std::to_string(kOverfitN) + " images within " +
                    std::to_string(kOverfitSteps) + " steps: " + detail);
  if (!failed.empty()) {
    // Logits in [0, 1]: best case is 1 on the label and 0 elsewhere.
    const double floor = std::log(1.0 + 9.0 / std::exp(1.0));
    info("[0,1]-bounded logits of " + failed + " put a floor of " + fmt(floor, 6) + " under cross-entropy");
    for (NetworkVariant v : {NetworkVariant::kII, NetworkVariant::kF}) {
      double min_loss = 0.0;
      const std::size_t hit = first_step_below(overfit_run(v, small, LossKind::kMse), kOverfitLoss, min_loss);
      info(std::string(to_string(v)) + " with --loss mse: " +
           (hit ? "below " + fmt(kOverfitLoss) + " at step " + std::to_string(hit) : "min " + fmt(min_loss)) +
           " (not counted)");
    }
  }
}

double train_and_score(NetworkVariant v, DatasetKind dataset, const Dataset& train_set, const Dataset& test_set,
                       std::uint64_t seed) {
  Network net = build(v, dataset, seed);
  TrainOptions opt;
  opt.seed = seed;
  opt.wall_clock = false;
  opt.evaluate_each_epoch = false;
  train_network(net, train_set, nullptr, opt);
  return evaluate(net, test_set);
}

void criterion_8(const fs::path& data_dir) {
  if (!has_mnist(data_dir)) {
    report(8, "SKIP", "no MNIST IDX files in " + data_dir.string());
    return;
  }
  const Dataset full_train = load_mnist(data_dir, Split::kTrain);
  const Dataset test_set = load_mnist(data_dir, Split::kTest);
  if (full_train.size() >= kCompetenceN && test_set.size() >= 10000) {
    const Dataset train_set = subset(full_train, kCompetenceN, 42);
    const double c = train_and_score(NetworkVariant::kClassical, DatasetKind::kMnist, train_set, test_set, 42);
    const double ii = train_and_score(NetworkVariant::kII, DatasetKind::kMnist, train_set, test_set, 42);
    verdict(8, c >= kCompetenceAcc && ii >= kCompetenceAcc,
           "10000 train / " + std::to_string(test_set.size()) + " test, 5 epochs: classical " + fmt(c) + ", ii " +
               fmt(ii) + " (need >= " + fmt(kCompetenceAcc) + ")");
    return;
  }
  report(8, "SKIP",
         "needs >= " + std::to_string(kCompetenceN) + " train images and the 10000-image test set; " +
             data_dir.string() + " has " + std::to_string(full_train.size()) + " / " +
             std::to_string(test_set.size()));
  const double c = train_and_score(NetworkVariant::kClassical, DatasetKind::kMnist, full_train, test_set, 42);
  const double ii = train_and_score(NetworkVariant::kII, DatasetKind::kMnist, full_train, test_set, 42);
  info("same schedule on the available " + std::to_string(full_train.size()) + " / " +
       std::to_string(test_set.size()) + " split: classical " + fmt(c) + ", ii " + fmt(ii) + " (not counted)");
}

// -------------------------------------------------------------------- full

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void criteria_9_10(const fs::path& data_dir) {
  const bool present = has_mnist(data_dir);
  const std::size_t n_train = present ? load_mnist(data_dir, Split::kTrain).size() : 0;
  if (n_train < 60000) {
    const std::string why = "needs the 60000-image MNIST training set in " + data_dir.string();
    report(9, "SKIP", why);
    report(10, "SKIP", why);
    return;
  }
  const Dataset train_set = load_mnist(data_dir, Split::kTrain);
  const Dataset test_set = load_mnist(data_dir, Split::kTest);
  std::vector<double> ii, classical, i1, i2, i3;
  for (std::uint64_t s : kSeeds) {
    ii.push_back(train_and_score(NetworkVariant::kII, DatasetKind::kMnist, train_set, test_set, s));
    classical.push_back(train_and_score(NetworkVariant::kClassical, DatasetKind::kMnist, train_set, test_set, s));
    i1.push_back(train_and_score(NetworkVariant::kI1, DatasetKind::kMnist, train_set, test_set, s));
    i2.push_back(train_and_score(NetworkVariant::kI2, DatasetKind::kMnist, train_set, test_set, s));
    i3.push_back(train_and_score(NetworkVariant::kI3, DatasetKind::kMnist, train_set, test_set, s));
  }
  bool band = true, order = true;
  std::string detail;
  for (std::size_t k = 0; k < kSeeds.size(); ++k) {
    band = band && std::abs(ii[k] - kFullIiTarget) <= kFullBand &&
           std::abs(classical[k] - kFullClassicalTarget) <= kFullBand;
    order = order && ii[k] > classical[k];
    detail += (k ? "; " : "") + std::string("seed ") + std::to_string(kSeeds[k]) + " ii " + fmt(ii[k]) +
              " classical " + fmt(classical[k]);
  }
  verdict(9, band && order,
         detail + " (band +/-" + fmt(kFullBand) + ", ordering " + (order ? "holds" : "broken") + ")");
  const double m1 = median3(i1), m2 = median3(i2), m3 = median3(i3);
  verdict(10, m1 >= m2 && m2 >= m3, "median acc i1 " + fmt(m1) + ", i2 " + fmt(m2) + ", i3 " + fmt(m3));
}

void criterion_11(const fs::path& cifar_dir) {
  if (!fs::exists(cifar_dir / "data_batch_1.bin") || !fs::exists(cifar_dir / "test_batch.bin")) {
    report(11, "SKIP", "no CIFAR-10 binary batches in " + cifar_dir.string());
    return;
  }
  const Dataset train_set = subset(load_cifar10(cifar_dir, Split::kTrain), kCifarTrainN, 42);
  const Dataset test_set = subset(load_cifar10(cifar_dir, Split::kTest), kCifarTestN, 42);
  bool order = true;
  std::string detail;
  for (std::uint64_t s : kSeeds) {
    const double c = train_and_score(NetworkVariant::kClassical, DatasetKind::kCifar10, train_set, test_set, s);
    const double ii = train_and_score(NetworkVariant::kII, DatasetKind::kCifar10, train_set, test_set, s);
    order = order && c >= ii;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(s) + " classical " + fmt(c) +
              " ii " + fmt(ii);
  }
  verdict(11, order, detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qicnn acceptance runner"};
  std::string suite = "all";
  std::string data_dir = QICNN_MNIST_DIR;
  std::string cifar_dir = "data/cifar10";
  std::uint64_t seed = 1;
  app.add_option("--suite", suite, "property | desk | full | all")
      ->check(CLI::IsMember({"property", "desk", "full", "all"}));
  app.add_option("--data-dir", data_dir, "MNIST IDX directory");
  app.add_option("--cifar-dir", cifar_dir, "CIFAR-10 binary directory");
  app.add_option("--seed", seed, "seed for the randomized property checks");
  CLI11_PARSE(app, argc, argv);

  set_num_threads(1);
  const auto start = std::chrono::steady_clock::now();
  const bool all = suite == "all";
  if (all || suite == "property") {
    criterion_1(seed);
    criterion_2(seed);
    criterion_3(seed);
    criterion_4(seed);
    criterion_5();
    criterion_6(data_dir);
  }
  if (all || suite == "desk") {
    criterion_7(data_dir);
    criterion_8(data_dir);
  }
  if (all || suite == "full") {
    const char* gate = std::getenv("QICNN_FULL_SCALE");
    if (gate == nullptr || std::string(gate) != "1") {
      for (int c : {9, 10, 11}) report(c, "SKIP", "full-scale run; set QICNN_FULL_SCALE=1");
    } else {
      criteria_9_10(data_dir);
      criterion_11(cifar_dir);
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "summary: " << tally.pass << " passed, " << tally.fail << " failed, " << tally.skip
            << " skipped (" << fmt(secs, 3) << " s)" << std::endl;
  return tally.fail == 0 ? 0 : 1;
}
