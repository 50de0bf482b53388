#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lrcalib/config.hpp"

namespace lrcalib {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

// Subcommand bodies. The CLI front end parses flags into these; tests call
// them directly.
void cmd_gen(const ExperimentConfig& config, std::uint64_t seed, const std::string& out_path);

void cmd_base_train(const ExperimentConfig& config, std::uint64_t seed,
                    const std::string& features_path, const std::string& out_dir);

void cmd_finetune(const ExperimentConfig& config, const std::string& checkpoint_dir,
                  const std::string& features_path, const std::string& out_path);

void cmd_ablate(const ExperimentConfig& config, const std::string& grid_spec,
                const std::string& features_path, const std::string& out_path);

void cmd_report(const std::string& metrics_path, const std::string& plot_prefix,
                std::ostream& out);

// Full argv-style entry point; maps errors onto exit codes.
int run_cli(const std::vector<std::string>& args);

}  // namespace lrcalib
