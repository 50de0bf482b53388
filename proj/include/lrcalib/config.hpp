#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lrcalib/fdbo.hpp"
#include "lrcalib/lrsample.hpp"

namespace lrcalib {

enum class IfcHidden { equal, low, high };

// Full experiment description. Defaults follow the reference settings:
// lr 0.01 base / 0.005 fine-tune, loss weights 0.05/0.4/0.3/0.1, two
// cascaded LRSamples, sigmoid reweighting, d_in 0.3, eta 1.5, 200-step
// warm-up, bank capacity 4096, 15 base + 5 novel classes.
struct ExperimentConfig {
    // world
    std::size_t dim = 16;
    std::size_t base_classes = 15;
    std::size_t novel_classes = 5;
    double delta = 1.0;        // novel-mean offset from its similar base mean
    double spread = 1.0;       // within-class standard deviation scale
    double mean_scale = 6.0;   // norm of base class means
    double sigma_jitter = 0.5; // per-component variance jitter, U(1-j, 1+j)

    // training
    int k_shot = 1;
    double lr_base = 0.01;
    double lr_finetune = 0.005;
    double lambda1 = 0.05;
    double lambda2 = 0.4;
    double lambda3 = 0.3;
    double lambda4 = 0.1;
    std::size_t lrsample_count = 2;
    GFamily g_family = GFamily::sigmoid;
    double g_alpha = 0.5;
    DensityParams density;
    std::size_t warmup_steps = 200;
    std::size_t bank_capacity = 4096;
    std::size_t base_steps = 2000;
    std::size_t finetune_steps = 600;
    std::size_t batch_size = 32;

    // modules
    bool ccva_enabled = true;
    std::size_t ccva_k = 2;      // base classes averaged in variance transfer
    std::size_t ccva_n_aug = 8;  // augmented draws per novel class per step
    bool fdbo_enabled = true;
    bool edge_grad_flow = false;  // backprop L_edge into the classifier through v
    IfcHidden ifc_hidden = IfcHidden::equal;
    bool ifc_joint_classifier = false;
    SelectionMode selection_mode = SelectionMode::raw_scores;

    // evaluation / io
    std::size_t eval_n_test = 200;
    std::size_t gen_samples_per_class = 100;
    bool dump_importance = false;

    std::vector<std::uint64_t> seeds = {1};

    std::size_t class_count() const { return base_classes + novel_classes; }
    std::size_t ifc_hidden_dim() const;

    // Throws InvalidConfigError naming the offending key.
    void validate() const;

    // Flat key=value view, keys sorted; the manifest embeds this verbatim.
    std::map<std::string, std::string> to_flat() const;

    // Applies one key=value pair; unknown keys or bad values throw
    // InvalidConfigError naming the key.
    void set_key(const std::string& key, const std::string& value);
};

// Parses the flat key=value config format ('#' comments, blank lines ok).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

std::string g_family_name(GFamily f);
GFamily g_family_from_name(const std::string& name);

}  // namespace lrcalib
