#include "qicnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qicnn/random.hpp"

namespace qicnn {

namespace {

struct Probe {
  double loss;
  std::uint64_t signature;
};

Probe evaluate(const LossBuilder& build) {
  Tape tape;
  tape.set_branch_tracking(true);
  Var loss = build(tape);
  return {loss.value()[0], tape.diagnostics().branch_signature};
}

}  // namespace

GradCheckReport finite_diff_check(std::span<Parameter* const> params, const LossBuilder& build,
                                  const GradCheckOptions& options) {
  GradCheckReport report;
  std::size_t total = 0;
  for (const Parameter* p : params) total += p->value.size();
  if (total == 0 || options.sample_count == 0) return report;

  std::vector<Tensor> saved_grads;
  for (Parameter* p : params) {
    saved_grads.push_back(p->grad);
    p->zero_grad();
  }

  std::uint64_t base_signature = 0;
  {
    Tape tape;
    tape.set_branch_tracking(true);
    Var loss = build(tape);
    base_signature = tape.diagnostics().branch_signature;
    tape.backward(loss);
  }
  std::vector<Tensor> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad);

  SplitMix64 rng(options.seed);
  const std::size_t max_attempts = 20 * options.sample_count;
  for (std::size_t attempt = 0;
       attempt < max_attempts && report.num_checked < options.sample_count; ++attempt) {
    std::size_t flat = rng.below(total);
    std::size_t k = 0;
    while (flat >= params[k]->value.size()) flat -= params[k++]->value.size();
    Parameter& p = *params[k];

    const double original = p.value[flat];
    p.value[flat] = original + options.step;
    const Probe plus = evaluate(build);
    p.value[flat] = original - options.step;
    const Probe minus = evaluate(build);
    p.value[flat] = original;

    if (plus.signature != base_signature || minus.signature != base_signature) {
      ++report.num_skipped;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * options.step);
    const double a = analytic[k][flat];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
    double rel = std::abs(a - numeric) / denom;
    if (!std::isfinite(rel)) rel = std::numeric_limits<double>::infinity();
    ++report.num_checked;
    if (report.num_checked == 1 || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_parameter = p.name;
      report.worst_coordinate = flat;
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = saved_grads[k];
  return report;
}

}  // namespace qicnn
