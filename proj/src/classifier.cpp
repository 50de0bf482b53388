#include "lrcalib/classifier.hpp"

#include <algorithm>
#include <cmath>

namespace lrcalib {

LinearHead::LinearHead(std::size_t classes_, std::size_t dim_, std::size_t base_count_)
    : classes(classes_), dim(dim_), base_count(base_count_), w(classes_ * dim_, 0.0),
      b(classes_, 0.0) {}

Vec LinearHead::logits(const Vec& x) const {
    if (x.size() != dim) throw DimensionMismatchError("LinearHead::logits: feature dim mismatch");
    Vec z(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const double* row = w.data() + c * dim;
        double s = b[c];
        for (std::size_t j = 0; j < dim; ++j) s += row[j] * x[j];
        z[c] = s;
    }
    return z;
}

void LinearHead::extend(std::size_t new_classes) {
    if (new_classes < classes)
        throw DimensionMismatchError("LinearHead::extend: cannot shrink class count");
    w.resize(new_classes * dim, 0.0);
    b.resize(new_classes, 0.0);
    classes = new_classes;
}

double ce_from_logits(const Vec& logits, std::size_t label) {
    if (label >= logits.size())
        throw DimensionMismatchError("ce_from_logits: label outside logit row");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - m);
    return m + std::log(sum) - logits[label];
}

std::size_t argmax_lowest(const Vec& v) {
    if (v.empty()) throw EmptyInputError("argmax_lowest: empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

Vec ce_logit_grad(const Vec& logits, std::size_t label) {
    if (label >= logits.size())
        throw DimensionMismatchError("ce_logit_grad: label outside logit row");
    Vec g = softmax(logits);
    g[label] -= 1.0;
    return g;
}

void accumulate_ce_grad(const LinearHead& head, const Vec& x, std::size_t label, double scale,
                        HeadGrad& grad) {
    const Vec z = head.logits(x);
    Vec g = ce_logit_grad(z, label);
    for (double& v : g) v *= scale;
    accumulate_logit_grad(head, x, g, grad);
}

void accumulate_logit_grad(const LinearHead& head, const Vec& x, const Vec& glogits,
                           HeadGrad& grad) {
    if (glogits.size() != head.classes)
        throw DimensionMismatchError("accumulate_logit_grad: logit grad size mismatch");
    for (std::size_t c = 0; c < head.classes; ++c) {
        const double g = glogits[c];
        if (g == 0.0) continue;
        double* row = grad.gw.data() + c * head.dim;
        for (std::size_t j = 0; j < head.dim; ++j) row[j] += g * x[j];
        grad.gb[c] += g;
    }
}

void apply_grad(LinearHead& head, const HeadGrad& grad, double lr) {
    for (std::size_t i = 0; i < head.w.size(); ++i) head.w[i] -= lr * grad.gw[i];
    for (std::size_t i = 0; i < head.b.size(); ++i) head.b[i] -= lr * grad.gb[i];
}

}  // namespace lrcalib
