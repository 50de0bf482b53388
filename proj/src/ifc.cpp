#include "lrcalib/ifc.hpp"

#include <cmath>
#include <random>

namespace lrcalib {

IfcModel make_ifc(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
    if (dim < 2) throw DimensionMismatchError("make_ifc: dimension must be >= 2");
    if (hidden == 0) throw DimensionMismatchError("make_ifc: hidden width must be positive");
    IfcModel m;
    m.in_dim = dim;
    m.hidden_dim = hidden;
    m.w1.resize(hidden * dim);
    m.b1.resize(hidden);
    m.w2.resize(dim * hidden);
    m.b2.resize(dim);

    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& x : m.w1) x = u(rng);
    for (double& x : m.b1) x = u(rng);
    for (double& x : m.w2) x = u(rng);
    for (double& x : m.b2) x = u(rng);
    return m;
}

namespace {

struct ForwardTrace {
    Vec pre;     // w1 x + b1
    Vec hidden;  // relu(pre)
    Vec out;     // w2 hidden + b2
};

ForwardTrace forward_trace(const IfcModel& m, const Vec& x) {
    if (x.size() != m.in_dim)
        throw DimensionMismatchError("ifc_forward: input dimension mismatch");
    ForwardTrace t;
    t.pre.resize(m.hidden_dim);
    t.hidden.resize(m.hidden_dim);
    for (std::size_t r = 0; r < m.hidden_dim; ++r) {
        const double* row = m.w1.data() + r * m.in_dim;
        double s = m.b1[r];
        for (std::size_t j = 0; j < m.in_dim; ++j) s += row[j] * x[j];
        t.pre[r] = s;
        t.hidden[r] = s > 0.0 ? s : 0.0;
    }
    t.out.resize(m.in_dim);
    for (std::size_t r = 0; r < m.in_dim; ++r) {
        const double* row = m.w2.data() + r * m.hidden_dim;
        double s = m.b2[r];
        for (std::size_t j = 0; j < m.hidden_dim; ++j) s += row[j] * t.hidden[j];
        t.out[r] = s;
    }
    return t;
}

}  // namespace

Vec ifc_forward(const IfcModel& model, const Vec& x) {
    return forward_trace(model, x).out;
}

double loss_trans(const std::vector<Vec>& transferred, const std::vector<Vec>& targets) {
    if (transferred.empty()) throw EmptyInputError("loss_trans: empty batch");
    if (transferred.size() != targets.size())
        throw DimensionMismatchError("loss_trans: batch length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < transferred.size(); ++i)
        sum += 1.0 - cosine_sim(transferred[i], targets[i]);
    return sum / static_cast<double>(transferred.size());
}

double loss_spec(const std::vector<Vec>& logits, const std::vector<ClassId>& classes) {
    if (logits.empty()) throw EmptyInputError("loss_spec: empty batch");
    if (logits.size() != classes.size())
        throw DimensionMismatchError("loss_spec: batch length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i)
        sum += ce_from_logits(logits[i], classes[i].id);
    return sum / static_cast<double>(logits.size());
}

double ifc_objective(const IfcModel& model, const IfcTrainBatch& batch,
                     const LinearHead& classifier, double lambda1, double lambda2) {
    if (batch.inputs.empty()) throw EmptyInputError("ifc_objective: empty batch");
    std::vector<Vec> transferred;
    std::vector<Vec> logits;
    transferred.reserve(batch.inputs.size());
    logits.reserve(batch.inputs.size());
    for (const Vec& x : batch.inputs) {
        transferred.push_back(ifc_forward(model, x));
        logits.push_back(classifier.logits(transferred.back()));
    }
    return lambda1 * loss_trans(transferred, batch.targets) +
           lambda2 * loss_spec(logits, batch.classes);
}

IfcModel ifc_train_step(IfcModel model, const IfcTrainBatch& batch, LinearHead& classifier,
                        double lambda1, double lambda2, double lr, bool update_classifier) {
    const std::size_t n = batch.inputs.size();
    if (n == 0) throw EmptyInputError("ifc_train_step: empty batch");
    if (batch.targets.size() != n || batch.classes.size() != n)
        throw DimensionMismatchError("ifc_train_step: batch sequences misaligned");

    const std::size_t d = model.in_dim;
    const std::size_t h = model.hidden_dim;
    Vec gw1(h * d, 0.0), gb1(h, 0.0), gw2(d * h, 0.0), gb2(d, 0.0);
    HeadGrad head_grad(classifier);

    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec& x = batch.inputs[i];
        const Vec& t = batch.targets[i];
        const ForwardTrace trace = forward_trace(model, x);
        const Vec& u = trace.out;

        // d(lambda1 * L_trans)/du for this sample: -(lambda1/n) d cos(u,t)/du.
        const double nu = norm(u);
        const double nt = norm(t);
        if (nu <= kNormEps || nt <= kNormEps)
            throw ZeroVectorError("ifc_train_step: degenerate transfer or target vector");
        const double c = dot(u, t);
        Vec gu(d, 0.0);
        const double a1 = lambda1 * inv_n;
        for (std::size_t j = 0; j < d; ++j)
            gu[j] = -a1 * (t[j] / (nu * nt) - c * u[j] / (nu * nu * nu * nt));

        // d(lambda2 * L_spec)/du through the (fixed) classifier.
        const Vec z = classifier.logits(u);
        Vec gz = ce_logit_grad(z, batch.classes[i].id);
        for (double& v : gz) v *= lambda2 * inv_n;
        for (std::size_t c2 = 0; c2 < classifier.classes; ++c2) {
            const double g = gz[c2];
            if (g == 0.0) continue;
            const double* row = classifier.w.data() + c2 * d;
            for (std::size_t j = 0; j < d; ++j) gu[j] += g * row[j];
        }
        if (update_classifier) accumulate_logit_grad(classifier, u, gz, head_grad);

        // Backprop through the perceptron.
        for (std::size_t r = 0; r < d; ++r) {
            const double g = gu[r];
            if (g == 0.0) continue;
            gb2[r] += g;
            double* row = gw2.data() + r * h;
            for (std::size_t j = 0; j < h; ++j) row[j] += g * trace.hidden[j];
        }
        Vec gs(h, 0.0);
        for (std::size_t j = 0; j < h; ++j) {
            if (trace.pre[j] <= 0.0) continue;
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) s += model.w2[r * h + j] * gu[r];
            gs[j] = s;
        }
        for (std::size_t r = 0; r < h; ++r) {
            const double g = gs[r];
            if (g == 0.0) continue;
            gb1[r] += g;
            double* row = gw1.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) row[j] += g * x[j];
        }
    }

    for (std::size_t i = 0; i < model.w1.size(); ++i) model.w1[i] -= lr * gw1[i];
    for (std::size_t i = 0; i < model.b1.size(); ++i) model.b1[i] -= lr * gb1[i];
    for (std::size_t i = 0; i < model.w2.size(); ++i) model.w2[i] -= lr * gw2[i];
    for (std::size_t i = 0; i < model.b2.size(); ++i) model.b2[i] -= lr * gb2[i];
    if (update_classifier) apply_grad(classifier, head_grad, lr);
    return model;
}

std::vector<Vec> generate_lrsamples(const IfcModel& model, const Vec& x, std::size_t count) {
    if (count == 0) throw EmptyInputError("generate_lrsamples: count must be >= 1");
    std::vector<Vec> out;
    out.reserve(count);
    Vec cur = ifc_forward(model, x);
    out.push_back(cur);
    for (std::size_t k = 1; k < count; ++k) {
        cur = ifc_forward(model, cur);
        out.push_back(cur);
    }
    return out;
}

}  // namespace lrcalib
