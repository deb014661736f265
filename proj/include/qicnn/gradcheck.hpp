#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "qicnn/autodiff.hpp"

namespace qicnn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;  // name of the parameter holding the worst coordinate
  std::size_t worst_coordinate = 0;
  std::size_t num_checked = 0;
  // Coordinates rejected because a +/- step crossed a ReLU kink, a pooling
  // tie or an arg singularity.
  std::size_t num_skipped = 0;
};

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t sample_count = 40;
  std::uint64_t seed = 0;
  // Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
  // coordinates whose true gradient is ~0 from reporting pure round-off.
  double denominator_floor = 1e-6;
};

// Records a forward pass on `tape` and returns the scalar loss.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares analytic gradients of `params` with central differences on
/// randomly sampled coordinates. Never throws for numerical reasons.
GradCheckReport finite_diff_check(std::span<Parameter* const> params, const LossBuilder& build,
                                  const GradCheckOptions& options = {});

}  // namespace qicnn
