#pragma once

#include "CLI11.hpp"

namespace lordba::cli {

// Each adds one subcommand whose callback performs the run. Failures are
// reported by throwing lordba::Error; main maps codes to exit statuses.
void add_compress(CLI::App& app);
void add_train_toy(CLI::App& app);
void add_reconstruct(CLI::App& app);
void add_diagnose(CLI::App& app);
void add_mc_validate(CLI::App& app);
void add_bench_kernel(CLI::App& app);
void add_synth(CLI::App& app);

}  // namespace lordba::cli
