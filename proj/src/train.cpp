#include "qicnn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "qicnn/adam.hpp"
#include "qicnn/checkpoint.hpp"
#include "qicnn/parallel.hpp"
#include "qicnn/run_config_io.hpp"

namespace qicnn {

void RunConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be > 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (subset_n && *subset_n < 1) throw std::invalid_argument("subset must be >= 1");
  if (test_subset_n && *test_subset_n < 1) throw std::invalid_argument("test subset must be >= 1");
  if (f_complex_fc && variant != NetworkVariant::kF) {
    throw std::invalid_argument("--f-complex-fc only applies to the f variant");
  }
}

namespace {
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void MetricsLog::write_csv(std::ostream& out) const {
  out << kHeader << '\n';
  for (const MetricsRow& r : rows) {
    out << r.epoch << ',' << r.step << ',' << format_double(r.train_loss) << ',';
    if (r.test_accuracy) out << format_double(*r.test_accuracy);
    out << ',' << r.wall_ms << ',' << r.singularity_count << '\n';
  }
}

void MetricsLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write metrics file " + path.string());
  write_csv(out);
  out.close();
  if (!out) throw DataError("failed writing metrics file " + path.string());
}

std::optional<double> MetricsLog::final_accuracy() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->test_accuracy) return it->test_accuracy;
  }
  return std::nullopt;
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t c = logits.dim(1);
  std::size_t best = 0;
  for (std::size_t j = 1; j < c; ++j) {
    if (logits.at(row, j) > logits.at(row, best)) best = j;
  }
  return best;
}

double evaluate(const LogitFn& logits, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    const Tensor out = logits(data.gather(idx));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (static_cast<int>(argmax_row(out, r)) == data.labels()[idx[r]]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate(Network& net, const Dataset& data, std::size_t batch_size) {
  return evaluate(
      [&net](const Tensor& batch) {
        Tape tape;
        return net.forward(tape, batch).value();
      },
      data, batch_size);
}

MetricsLog train_network(Network& net, const Dataset& train, const Dataset* test,
                         const TrainOptions& options) {
  if (options.epochs < 1 || options.batch_size < 1) {
    throw std::invalid_argument("epochs and batch size must be >= 1");
  }
  MetricsLog log;
  AdamConfig adam_cfg;
  adam_cfg.lr = options.lr;
  Adam adam(net.parameters(), adam_cfg);
  BatchIterator batches(train.size(), options.batch_size, options.seed);
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t step = 0;
  std::vector<std::size_t> idx;
  bool done = false;

  for (std::size_t epoch = 0; epoch < options.epochs && !done; ++epoch) {
    batches.start_epoch(epoch);
    while (batches.next(idx)) {
      const Tensor x = train.gather(idx);
      const std::vector<int> y = train.gather_labels(idx);
      Tape tape;
      const Var loss = net.loss(tape, x, y, options.loss);
      const double loss_value = loss.value()[0];
      const std::uint64_t singular = tape.diagnostics().singularities;
      ++step;
      if (!std::isfinite(loss_value)) {
        throw TrainingAbort("non-finite training loss at step " + std::to_string(step) +
                                " (" + std::to_string(singular) + " arg singularities in batch)",
                            step, singular);
      }
      adam.zero_grad();
      tape.backward(loss);
      try {
        adam.step();
      } catch (const NumericalError& e) {
        throw TrainingAbort(std::string(e.what()) + " (" + std::to_string(singular) +
                                " arg singularities in batch)",
                            step, singular);
      }
      const std::int64_t wall =
          options.wall_clock ? std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::steady_clock::now() - t0)
                                   .count()
                             : 0;
      log.rows.push_back({epoch + 1, step, loss_value, std::nullopt, wall, singular});
      if (options.max_steps && step >= options.max_steps) {
        done = true;
        break;
      }
    }
    if (test && options.evaluate_each_epoch && !log.rows.empty()) {
      log.rows.back().test_accuracy = evaluate(net, *test);
    }
  }
  return log;
}

TrainResult train(const RunConfig& config) {
  config.validate();
  set_num_threads(config.threads);
  const std::filesystem::path out_dir = config.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  Dataset train_set = load_dataset(config.dataset, config.data_dir, Split::kTrain);
  Dataset test_set = load_dataset(config.dataset, config.data_dir, Split::kTest);
  if (config.subset_n) train_set = subset(train_set, *config.subset_n, config.seed);
  if (config.test_subset_n) test_set = subset(test_set, *config.test_subset_n, config.seed);

  NetworkOptions opts;
  opts.f_complex_fc = config.f_complex_fc;
  Network net = build(config.variant, config.dataset, config.seed, opts);
  if (!config.init_checkpoint.empty()) load_checkpoint_into(net, config.init_checkpoint);

  // Metadata goes out first so a crashed run still records what it was.
  write_run_metadata(out_dir / "run.json", config, train_set, test_set);

  TrainOptions topts;
  topts.epochs = config.epochs;
  topts.batch_size = config.batch_size;
  topts.lr = config.lr;
  topts.seed = config.seed;
  topts.loss = config.loss;
  topts.wall_clock = config.wall_clock;
  MetricsLog log = train_network(net, train_set, &test_set, topts);

  log.write_csv(out_dir / "metrics.csv");
  save_checkpoint(net, out_dir / "model.qicn");
  return {std::move(net), std::move(log)};
}

}  // namespace qicnn
