#pragma once

#include <cstddef>
#include <vector>

#include "lrcalib/geometry.hpp"

namespace lrcalib {

// Linear softmax classifier over raw features. Rows are indexed by class id;
// ids [0, base_count) are base classes, the rest novel.
struct LinearHead {
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::size_t base_count = 0;
    Vec w;  // classes x dim, row-major
    Vec b;  // classes

    LinearHead() = default;
    LinearHead(std::size_t classes_, std::size_t dim_, std::size_t base_count_);

    Vec logits(const Vec& x) const;

    // Adds zero-initialized rows for newly introduced classes.
    void extend(std::size_t new_classes);
};

// Stable cross entropy of softmax(logits) against `label`.
double ce_from_logits(const Vec& logits, std::size_t label);

// Lowest index among the maxima.
std::size_t argmax_lowest(const Vec& v);

// Gradient accumulator for a LinearHead.
struct HeadGrad {
    Vec gw;
    Vec gb;
    explicit HeadGrad(const LinearHead& head) : gw(head.w.size(), 0.0), gb(head.b.size(), 0.0) {}
};

// Accumulates scale * d CE(head(x), label) / d head into `grad`.
void accumulate_ce_grad(const LinearHead& head, const Vec& x, std::size_t label, double scale,
                        HeadGrad& grad);

// Accumulates the head gradient for an arbitrary logit-space gradient.
void accumulate_logit_grad(const LinearHead& head, const Vec& x, const Vec& glogits,
                           HeadGrad& grad);

// Plain SGD update: param -= lr * grad.
void apply_grad(LinearHead& head, const HeadGrad& grad, double lr);

// d/dlogits of CE(softmax(logits), label) = softmax(logits) - onehot(label).
Vec ce_logit_grad(const Vec& logits, std::size_t label);

}  // namespace lrcalib
