#pragma once

#include <cstdint>
#include <vector>

#include "lrcalib/classifier.hpp"
#include "lrcalib/geometry.hpp"
#include "lrcalib/memory_bank.hpp"

namespace lrcalib {

// Intra-class feature converter: a single-hidden-layer perceptron with a
// rectifier, hidden width equal to the input width by default. Gradients
// are closed-form; no autodiff framework involved.
struct IfcModel {
    std::size_t in_dim = 0;
    std::size_t hidden_dim = 0;
    Vec w1;  // hidden_dim x in_dim, row-major
    Vec b1;  // hidden_dim
    Vec w2;  // in_dim x hidden_dim, row-major
    Vec b2;  // in_dim
};

// Uniform init in [-1/sqrt(d), 1/sqrt(d)], deterministic per seed.
IfcModel make_ifc(std::size_t dim, std::size_t hidden, std::uint64_t seed);

// w2 * relu(w1 * x + b1) + b2.
Vec ifc_forward(const IfcModel& model, const Vec& x);

// (1/n) sum_i [1 - cos(transferred_i, target_i)]; in [0, 2].
double loss_trans(const std::vector<Vec>& transferred, const std::vector<Vec>& targets);

// Mean cross entropy of the transfer-feature logits against class labels.
double loss_spec(const std::vector<Vec>& logits, const std::vector<ClassId>& classes);

struct IfcTrainBatch {
    std::vector<Vec> inputs;    // x_in
    std::vector<Vec> targets;   // selected LRSample targets
    std::vector<ClassId> classes;
};

// lambda1 * L_trans + lambda2 * L_spec evaluated at the current parameters.
double ifc_objective(const IfcModel& model, const IfcTrainBatch& batch,
                     const LinearHead& classifier, double lambda1, double lambda2);

// One SGD step on lambda1 * L_trans + lambda2 * L_spec w.r.t. the IFC
// parameters. The classifier acts as a fixed map unless update_classifier
// is set, in which case it receives its share of the L_spec gradient too.
IfcModel ifc_train_step(IfcModel model, const IfcTrainBatch& batch, LinearHead& classifier,
                        double lambda1, double lambda2, double lr,
                        bool update_classifier = false);

// Cascaded generation: out[0] = f(x), out[k] = f(out[k-1]).
std::vector<Vec> generate_lrsamples(const IfcModel& model, const Vec& x, std::size_t count);

}  // namespace lrcalib
