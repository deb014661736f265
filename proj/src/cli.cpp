#include "qicnn/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qicnn/checkpoint.hpp"
#include "qicnn/dataset.hpp"
#include "qicnn/parallel.hpp"
#include "qicnn/run_config_io.hpp"
#include "qicnn/train.hpp"
#include "qicnn/verify_ops.hpp"

namespace qicnn {

namespace {

constexpr double kGradcheckTolerance = 1e-4;

std::string valid_arch_list() {
  std::string s;
  for (NetworkVariant v : kAllVariants) {
    if (!s.empty()) s += ", ";
    s += to_string(v);
  }
  return s;
}

NetworkVariant require_variant(const std::string& tag) {
  if (auto v = parse_variant(tag)) return *v;
  throw std::invalid_argument("unknown --arch '" + tag + "'; valid tags: " + valid_arch_list());
}

DatasetKind require_dataset(const std::string& tag) {
  if (auto d = parse_dataset(tag)) return *d;
  throw std::invalid_argument("unknown --dataset '" + tag + "'; valid: mnist, cifar10");
}

LossKind require_loss(const std::string& tag) {
  if (auto l = parse_loss(tag)) return *l;
  throw std::invalid_argument("unknown --loss '" + tag + "'; valid: xent, mse");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct TrainFlags {
  std::string arch, dataset, data_dir, loss, out_dir, checkpoint, config;
  std::size_t subset = 0, test_subset = 0, epochs = 0, batch_size = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
  bool f_complex_fc = false;
  bool no_wall_clock = false;
};

void add_run_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--arch", f.arch, "classical, i1, i2, i3, ii or f");
  cmd->add_option("--dataset", f.dataset, "mnist or cifar10");
  cmd->add_option("--data-dir", f.data_dir, "directory holding the dataset files");
  cmd->add_option("--subset", f.subset, "train on a seeded random subset of this size");
  cmd->add_option("--test-subset", f.test_subset, "evaluate on a seeded random test subset");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--batch-size", f.batch_size);
  cmd->add_option("--lr", f.lr);
  cmd->add_option("--seed", f.seed);
  cmd->add_option("--loss", f.loss, "xent or mse");
  cmd->add_option("--threads", f.threads);
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--checkpoint", f.checkpoint, "initial weights");
  cmd->add_flag("--f-complex-fc", f.f_complex_fc, "f only: feed conv3's complex output to fc1");
  cmd->add_flag("--no-wall-clock", f.no_wall_clock, "write 0 into the wall_ms column");
  cmd->add_option("--config", f.config, "JSON object of flag values (flags take precedence)");
}

RunConfig resolve(const CLI::App* cmd, const TrainFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = run_config_from_json(read_text(f.config), cfg);
  auto given = [cmd](const char* name) { return cmd->count(name) > 0; };
  if (given("--arch")) cfg.variant = require_variant(f.arch);
  if (given("--dataset")) cfg.dataset = require_dataset(f.dataset);
  if (given("--data-dir")) cfg.data_dir = f.data_dir;
  if (given("--subset")) cfg.subset_n = f.subset;
  if (given("--test-subset")) cfg.test_subset_n = f.test_subset;
  if (given("--epochs")) cfg.epochs = f.epochs;
  if (given("--batch-size")) cfg.batch_size = f.batch_size;
  if (given("--lr")) cfg.lr = f.lr;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--loss")) cfg.loss = require_loss(f.loss);
  if (given("--threads")) cfg.threads = f.threads;
  if (given("--out")) cfg.out_dir = f.out_dir;
  if (given("--checkpoint")) cfg.init_checkpoint = f.checkpoint;
  if (given("--f-complex-fc")) cfg.f_complex_fc = f.f_complex_fc;
  if (given("--no-wall-clock")) cfg.wall_clock = false;
  cfg.validate();
  return cfg;
}

int cmd_train(const CLI::App* cmd, const TrainFlags& f, std::ostream& out) {
  const RunConfig cfg = resolve(cmd, f);
  const TrainResult result = train(cfg);
  const auto& rows = result.metrics.rows;
  out << "arch " << to_string(cfg.variant) << " dataset " << to_string(cfg.dataset) << " steps "
      << (rows.empty() ? 0 : rows.back().step);
  if (!rows.empty()) out << " final_train_loss " << fmt(rows.back().train_loss);
  if (auto acc = result.metrics.final_accuracy()) out << " test_accuracy " << fmt(*acc);
  out << "\nwrote " << (std::filesystem::path(cfg.out_dir) / "metrics.csv").string() << ", "
      << (std::filesystem::path(cfg.out_dir) / "model.qicn").string() << ", "
      << (std::filesystem::path(cfg.out_dir) / "run.json").string() << '\n';
  return kExitOk;
}

struct EvalFlags {
  std::string checkpoint, dataset, data_dir = "data/mnist", split = "test";
  std::size_t test_subset = 0;
  std::uint64_t seed = 42;
  int threads = 1;
};

int cmd_eval(const CLI::App* cmd, const EvalFlags& f, std::ostream& out) {
  set_num_threads(f.threads);
  Network net = load_checkpoint(f.checkpoint);
  if (cmd->count("--dataset") && require_dataset(f.dataset) != net.dataset()) {
    throw std::invalid_argument("checkpoint was trained on " + std::string(to_string(net.dataset())));
  }
  Dataset data = load_dataset(net.dataset(), f.data_dir, f.split == "train" ? Split::kTrain : Split::kTest);
  if (cmd->count("--test-subset")) data = subset(data, f.test_subset, f.seed);
  const double acc = evaluate(net, data);
  out << "arch " << to_string(net.variant()) << " split " << f.split << " samples " << data.size()
      << " accuracy " << fmt(acc) << '\n';
  return kExitOk;
}

struct GradcheckFlags {
  std::string arch = "i3", size = "tiny", loss = "xent";
  std::uint64_t seed = 0;
  bool f_complex_fc = false;
};

int cmd_gradcheck(const GradcheckFlags& f, std::ostream& out) {
  const NetworkVariant v = require_variant(f.arch);
  if (f.f_complex_fc && v != NetworkVariant::kF) {
    throw std::invalid_argument("--f-complex-fc only applies to the f variant");
  }
  NetworkOptions opts;
  opts.f_complex_fc = f.f_complex_fc;
  const GradCheckReport r = network_gradcheck(v, f.size == "tiny", f.seed, require_loss(f.loss), opts);
  out << "arch " << f.arch << " size " << f.size << " checked " << r.num_checked << " skipped "
      << r.num_skipped << " max_rel_error " << std::setprecision(6) << r.max_rel_error;
  if (!r.worst_parameter.empty()) out << " worst " << r.worst_parameter << '[' << r.worst_coordinate << ']';
  out << '\n';
  return r.num_checked > 0 && r.max_rel_error <= kGradcheckTolerance ? kExitOk : kExitNumerical;
}

int cmd_verify_ops(std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const SuiteResult& r : run_verify_ops(seed)) {
    ok = ok && r.passed();
    out << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.instances
        << " instances, max error " << std::setprecision(3) << r.max_error << " (tolerance "
        << r.tolerance << ")\n";
  }
  return ok ? kExitOk : kExitNumerical;
}

void describe(const Dataset& d, std::ostream& out) {
  out << to_string(d.split()) << ": " << d.size() << " images of " << d.channels() << 'x'
      << d.height() << 'x' << d.width() << "\n  labels:";
  const auto hist = d.class_histogram();
  for (std::size_t c = 0; c < hist.size(); ++c) out << ' ' << c << '=' << hist[c];
  out << '\n';
  for (const FileProvenance& p : d.provenance) out << "  " << p.sha256 << "  " << p.path << '\n';
}

int cmd_inspect(const std::string& dataset, const std::string& dir, const std::string& split,
                std::ostream& out) {
  const DatasetKind kind = require_dataset(dataset);
  if (split != "test") describe(load_dataset(kind, dir, Split::kTrain), out);
  if (split != "train") describe(load_dataset(kind, dir, Split::kTest), out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum-inspired complex CNN trainer", "qicnn"};
  app.require_subcommand(1);

  TrainFlags train_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "train a network and write its artifacts");
  add_run_flags(train_cmd, train_flags);

  EvalFlags eval_flags;
  CLI::App* eval_cmd = app.add_subcommand("eval", "test accuracy of a saved checkpoint");
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoint)->required();
  eval_cmd->add_option("--dataset", eval_flags.dataset);
  eval_cmd->add_option("--data-dir", eval_flags.data_dir);
  eval_cmd->add_option("--split", eval_flags.split)->check(CLI::IsMember({"train", "test"}));
  eval_cmd->add_option("--test-subset", eval_flags.test_subset);
  eval_cmd->add_option("--seed", eval_flags.seed, "subset seed");
  eval_cmd->add_option("--threads", eval_flags.threads);

  GradcheckFlags gc_flags;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of a whole network");
  gc_cmd->add_option("--arch", gc_flags.arch);
  gc_cmd->add_option("--size", gc_flags.size)->check(CLI::IsMember({"tiny", "full"}));
  gc_cmd->add_option("--seed", gc_flags.seed);
  gc_cmd->add_option("--loss", gc_flags.loss);
  gc_cmd->add_flag("--f-complex-fc", gc_flags.f_complex_fc);

  std::uint64_t verify_seed = 1;
  CLI::App* verify_cmd = app.add_subcommand("verify-ops", "compare the ops against reference oracles");
  verify_cmd->add_option("--seed", verify_seed);

  std::string inspect_dataset = "mnist", inspect_dir = "data/mnist", inspect_split = "both";
  CLI::App* inspect_cmd = app.add_subcommand("inspect-data", "summarize a dataset directory");
  inspect_cmd->add_option("--dataset", inspect_dataset);
  inspect_cmd->add_option("--data-dir", inspect_dir);
  inspect_cmd->add_option("--split", inspect_split)->check(CLI::IsMember({"train", "test", "both"}));

  std::vector<std::string> storage{"qicnn"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_cmd, train_flags, out);
    if (*eval_cmd) return cmd_eval(eval_cmd, eval_flags, out);
    if (*gc_cmd) return cmd_gradcheck(gc_flags, out);
    if (*verify_cmd) return cmd_verify_ops(verify_seed, out);
    if (*inspect_cmd) return cmd_inspect(inspect_dataset, inspect_dir, inspect_split, out);
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::out_of_range& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace qicnn
