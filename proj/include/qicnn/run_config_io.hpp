#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "qicnn/dataset.hpp"
#include "qicnn/train.hpp"

namespace qicnn {

// Resolved configuration as a flat JSON object. Keys mirror the CLI flags
// (arch, dataset, data_dir, subset, test_subset, epochs, batch_size, lr,
// seed, loss, threads, out, checkpoint, f_complex_fc, wall_clock).
std::string run_config_to_json(const RunConfig& config);

// Applies the keys present in `text` on top of `base`. Unknown keys or
// ill-typed values throw std::invalid_argument. A "metadata" member (as
// written into run.json) is ignored.
RunConfig run_config_from_json(std::string_view text, RunConfig base = {});

// run.json: the resolved config plus a "metadata" object with the label
// histograms and source file checksums.
void write_run_metadata(const std::filesystem::path& path, const RunConfig& config,
                        const Dataset& train, const Dataset& test);

}  // namespace qicnn
