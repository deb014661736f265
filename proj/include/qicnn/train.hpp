#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qicnn/dataset.hpp"
#include "qicnn/network.hpp"

namespace qicnn {

struct RunConfig {
  NetworkVariant variant = NetworkVariant::kClassical;
  DatasetKind dataset = DatasetKind::kMnist;
  std::string data_dir = "data/mnist";
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  std::optional<std::size_t> subset_n;       // train subset size
  std::optional<std::size_t> test_subset_n;  // test subset size
  LossKind loss = LossKind::kCrossEntropy;
  int threads = 1;
  std::string out_dir = "runs/default";
  std::string init_checkpoint;  // optional warm start
  bool f_complex_fc = false;
  // Off writes 0 into the wall_ms column so metrics files compare bytewise.
  bool wall_clock = true;

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// Thrown when training hits a non-finite loss or gradient.
class TrainingAbort : public NumericalError {
 public:
  TrainingAbort(const std::string& what, std::size_t step, std::uint64_t singularities)
      : NumericalError(what), step_(step), singularities_(singularities) {}
  std::size_t step() const { return step_; }
  std::uint64_t singularities() const { return singularities_; }

 private:
  std::size_t step_;
  std::uint64_t singularities_;
};

struct MetricsRow {
  std::size_t epoch;
  std::size_t step;
  double train_loss;
  std::optional<double> test_accuracy;  // set on the last step of an epoch
  std::int64_t wall_ms;
  std::uint64_t singularity_count;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;

  static constexpr const char* kHeader =
      "epoch,step,train_loss,test_accuracy,wall_ms,singularity_count";
  void write_csv(std::ostream& out) const;
  void write_csv(const std::filesystem::path& path) const;
  std::optional<double> final_accuracy() const;
};

struct TrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  LossKind loss = LossKind::kCrossEntropy;
  bool wall_clock = true;
  // Stop after this many optimizer steps (0 = no limit).
  std::size_t max_steps = 0;
  // Skip the per-epoch test evaluation even if a test set is given.
  bool evaluate_each_epoch = true;
};

/// Adam training of `net` on `train`; evaluates `test` (if non-null) after
/// every epoch. Throws TrainingAbort on NaN/Inf.
MetricsLog train_network(Network& net, const Dataset& train, const Dataset* test,
                         const TrainOptions& options);

struct TrainResult {
  Network network;
  MetricsLog metrics;
};

/// Full run: loads data, builds the network, trains, and writes
/// metrics.csv, model.qicn and run.json into config.out_dir.
TrainResult train(const RunConfig& config);

using LogitFn = std::function<Tensor(const Tensor& batch)>;

/// Fraction of samples whose argmax logit (lowest index on ties) equals the
/// label.
double evaluate(const LogitFn& logits, const Dataset& data, std::size_t batch_size = 250);
double evaluate(Network& net, const Dataset& data, std::size_t batch_size = 250);

std::size_t argmax_row(const Tensor& logits, std::size_t row);

}  // namespace qicnn
