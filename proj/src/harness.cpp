#include "lrcalib/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lrcalib/lrsample.hpp"
#include "lrcalib/rng.hpp"

namespace lrcalib {

std::vector<std::size_t> draw_batch_indices(std::mt19937_64& rng, std::size_t batch,
                                            std::size_t set_size) {
    if (set_size == 0) throw EmptyInputError("draw_batch_indices: empty sample set");
    if (batch == 0) throw EmptyInputError("draw_batch_indices: empty batch");
    std::uniform_int_distribution<std::size_t> pick(0, set_size - 1);
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = pick(rng);
    return idx;
}

BalancedSet draw_balanced_set(const FeatureSource& source, const ExperimentConfig& config,
                              std::uint64_t seed) {
    std::mt19937_64 rng = make_stream(seed, "shots");
    BalancedSet set;
    const std::size_t total = source.class_count() * static_cast<std::size_t>(config.k_shot);
    set.features.reserve(total);
    set.labels.reserve(total);
    for (std::uint32_t c = 0; c < source.class_count(); ++c) {
        for (int k = 0; k < config.k_shot; ++k) {
            set.features.push_back(source.draw(c, rng));
            set.labels.push_back(source.class_id(c));
        }
    }
    return set;
}

BaseArtifacts base_train(const FeatureSource& source, const ExperimentConfig& config,
                         std::uint64_t seed) {
    config.validate();
    const std::size_t d = source.dim();
    const std::size_t B = source.base_count();

    BaseArtifacts art;
    art.head = LinearHead(B, d, B);
    art.ifc = make_ifc(d, config.ifc_hidden_dim(), stream_seed(seed, "ifc-init"));
    art.bank = MemoryBank(d, config.bank_capacity);

    std::mt19937_64 rng = make_stream(seed, "base-batches");
    std::uniform_int_distribution<std::uint32_t> pick_class(0, static_cast<std::uint32_t>(B) - 1);

    const std::size_t n = config.batch_size;
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<Vec> xs(n);
    std::vector<ClassId> ys(n);

    for (std::size_t step = 0; step < config.base_steps; ++step) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = pick_class(rng);
            xs[i] = source.draw(c, rng);
            ys[i] = source.class_id(c);
        }

        // Classifier CE step.
        double cls_loss = 0.0;
        HeadGrad grad(art.head);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec z = art.head.logits(xs[i]);
            cls_loss += ce_from_logits(z, ys[i].id);
            Vec gz = ce_logit_grad(z, ys[i].id);
            for (double& g : gz) g *= inv_n;
            accumulate_logit_grad(art.head, xs[i], gz, grad);
        }
        art.cls_loss_curve.push_back(cls_loss * inv_n);

        for (std::size_t i = 0; i < n; ++i) art.bank.insert(ys[i], xs[i]);

        if (step < config.warmup_steps) {
            apply_grad(art.head, grad, config.lr_base);
            continue;
        }

        // IFC step on this batch: targets come from the LRSample criterion
        // over the current bank. Pools are normalized once per class.
        struct PoolCtx {
            std::vector<Vec> raw;
            std::vector<UnitVec> units;
            UnitVec proto;
        };
        std::map<std::uint32_t, PoolCtx> pools;
        IfcTrainBatch tb;
        for (std::size_t i = 0; i < n; ++i) {
            auto it = pools.find(ys[i].id);
            if (it == pools.end()) {
                const auto* queue = art.bank.entries(ys[i].id);
                if (queue == nullptr || queue->size() < 2) continue;
                PoolCtx ctx;
                ctx.raw.reserve(queue->size());
                ctx.units.reserve(queue->size());
                for (const auto& e : *queue) {
                    ctx.raw.push_back(e.feature);
                    ctx.units.push_back(normalize(e.feature));
                }
                ctx.proto = art.bank.prototype(ys[i]).unit;
                it = pools.emplace(ys[i].id, std::move(ctx)).first;
            }
            const PoolCtx& ctx = it->second;
            const SelectionResult sel = select_from_pool(normalize(xs[i]), ctx.units, ctx.raw,
                                                         ctx.proto, config.selection_mode);
            tb.inputs.push_back(xs[i]);
            tb.targets.push_back(sel.target);
            tb.classes.push_back(ys[i]);
        }
        if (!tb.inputs.empty()) {
            art.ifc_loss_curve.push_back(
                ifc_objective(art.ifc, tb, art.head, config.lambda1, config.lambda2));
            art.ifc = ifc_train_step(std::move(art.ifc), tb, art.head, config.lambda1,
                                     config.lambda2, config.lr_base,
                                     config.ifc_joint_classifier);
        }
        apply_grad(art.head, grad, config.lr_base);
    }

    // Frozen per-base-class statistics from final bank contents
    // (componentwise mean and population variance).
    for (std::uint32_t b = 0; b < B; ++b) {
        const auto* queue = art.bank.entries(b);
        if (queue == nullptr || queue->empty()) continue;
        const double m = static_cast<double>(queue->size());
        ClassStats stats;
        stats.mean.assign(d, 0.0);
        stats.sigma2.assign(d, 0.0);
        for (const auto& e : *queue) add_scaled(stats.mean, e.feature, 1.0);
        for (double& x : stats.mean) x /= m;
        for (const auto& e : *queue)
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = e.feature[j] - stats.mean[j];
                stats.sigma2[j] += diff * diff;
            }
        for (double& x : stats.sigma2) x /= m;
        art.stats.emplace(b, std::move(stats));
    }
    return art;
}

namespace {

struct EdgeInfo {
    Region region = Region::central;
    double d_in = 0.0;
    double d_sim = 0.0;
    ClassId similar;
    bool evaluated = false;
};

// Density evaluation for one edge sample against the static fine-tuning
// pools. Samples whose pools cannot support the density rule stay central.
EdgeInfo edge_info_for(const Vec& x, const ClassId& own,
                       const std::map<std::uint32_t, Prototype>& protos,
                       const std::map<std::uint32_t, std::vector<Vec>>& pools,
                       const DensityParams& params) {
    EdgeInfo info;
    if (protos.size() < 2) return info;
    info.similar = similar_class(x, protos, own);
    auto own_it = pools.find(own.id);
    auto sim_it = pools.find(info.similar.id);
    if (own_it == pools.end() || own_it->second.size() < 4) return info;
    if (sim_it == pools.end() || sim_it->second.empty()) return info;
    try {
        const LocalDensities ld = local_densities(x, own_it->second, sim_it->second, params);
        info.region = classify_region(ld);
        info.d_in = ld.d_in_value;
        info.d_sim = ld.d_sim_value;
        info.evaluated = true;
    } catch (const DegenerateRadiusError&) {
        info.region = Region::central;
    }
    return info;
}

}  // namespace

FineTuneResult fine_tune(const BaseArtifacts& base, const FeatureSource& source,
                         const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    const std::size_t d = source.dim();
    const std::size_t B = source.base_count();
    const std::size_t V = source.novel_count();
    const std::size_t C = B + V;
    if (base.head.dim != d)
        throw DimensionMismatchError("fine_tune: head dimension does not match source");
    if (base.head.classes != B)
        throw DimensionMismatchError("fine_tune: head class count does not match base count");

    FineTuneResult result;
    result.head = base.head;
    result.head.extend(C);
    LinearHead& head = result.head;

    MemoryBank bank = base.bank;
    BalancedSet set = draw_balanced_set(source, config, seed);

    // Novel shots feed the bank so prototypes, LRSample generation, and
    // FDBO pools can see them; base pools stay the frozen training ones.
    for (std::size_t i = 0; i < set.features.size(); ++i)
        if (set.labels[i].partition == Partition::novel) bank.insert(set.labels[i], set.features[i]);

    SeedReport& report = result.report;
    report.seed = seed;

    std::map<std::uint32_t, GaussianSpec> aug_specs;
    if (config.ccva_enabled) {
        for (std::size_t v = 0; v < V; ++v) {
            const ClassId cls = source.class_id(static_cast<std::uint32_t>(B + v));
            std::vector<Vec> shots;
            for (std::size_t i = 0; i < set.features.size(); ++i)
                if (set.labels[i].id == cls.id) shots.push_back(set.features[i]);

            if (config.lrsample_count >= 1) {
                report.calibration.push_back(
                    calibrate_center(bank, base.ifc, cls, shots, config.lrsample_count));
            } else {
                // LRSample injection disabled: center stays where it is.
                const Prototype p = bank.prototype(cls);
                const Prototype similar = nearest_base_prototype(bank, p.mean);
                CalibrationReport r;
                r.cls = cls;
                r.center_before = p.mean;
                r.center_after = p.mean;
                r.similar_base = similar.cls;
                r.dist_to_similar_before = normalized_euclidean(p.mean, similar.mean);
                r.dist_to_similar_after = r.dist_to_similar_before;
                report.calibration.push_back(r);
            }
            const Prototype calibrated = bank.prototype(cls);
            aug_specs.emplace(cls.id,
                              variance_transfer(cls, base.stats, calibrated.mean, config.ccva_k));
        }
    }

    // FDBO context is static during fine-tuning: the bank only changes
    // before the loop. Edge-sample densities are cached per set index.
    std::map<std::uint32_t, Prototype> protos;
    std::map<std::uint32_t, std::vector<Vec>> pools;
    if (config.fdbo_enabled) {
        for (const ClassId& cls : bank.stored_classes()) {
            protos.emplace(cls.id, bank.prototype(cls));
            pools.emplace(cls.id, bank.class_pool(cls));
        }
    }
    std::vector<std::optional<EdgeInfo>> edge_cache(set.features.size());
    const ReweightFunction gfn{config.g_family, config.g_alpha};

    std::mt19937_64 batches = make_stream(seed, "batches");
    const std::size_t n = config.batch_size;
    const double inv_n = 1.0 / static_cast<double>(n);

    double weight_sum = 0.0;
    std::uint64_t weight_count = 0;

    for (std::size_t step = 0; step < config.finetune_steps; ++step) {
        const std::vector<std::size_t> idx =
            draw_batch_indices(batches, n, set.features.size());

        std::vector<Vec> logits(n);
        std::vector<ClassId> labels(n);
        Vec losses(n);
        double l_cls = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            logits[i] = head.logits(set.features[idx[i]]);
            labels[i] = set.labels[idx[i]];
            losses[i] = ce_from_logits(logits[i], labels[i].id);
            l_cls += losses[i];
        }
        l_cls *= inv_n;

        HeadGrad grad(head);
        for (std::size_t i = 0; i < n; ++i) {
            Vec gz = ce_logit_grad(logits[i], labels[i].id);
            for (double& g : gz) g *= inv_n;
            accumulate_logit_grad(head, set.features[idx[i]], gz, grad);
        }

        StepLoss step_loss;
        step_loss.cls = l_cls;

        const bool fdbo_active = config.fdbo_enabled && step >= config.warmup_steps;
        if (fdbo_active) {
            const std::vector<std::size_t> edges = find_edge_samples(logits, labels);
            std::vector<Region> regions(n, Region::central);
            for (std::size_t e : edges) {
                const std::size_t si = idx[e];
                if (!edge_cache[si])
                    edge_cache[si] = edge_info_for(set.features[si], set.labels[si], protos,
                                                   pools, config.density);
                regions[e] = edge_cache[si]->region;
                if (config.dump_importance) {
                    const EdgeInfo& info = *edge_cache[si];
                    report.importance.push_back(ImportanceRow{
                        step, si, info.region, info.d_in, info.d_sim,
                        reweight(info.region, losses[e], gfn)});
                }
            }
            const Vec weights = assign_importance(losses, regions, gfn);
            step_loss.cls_w = loss_cls_weighted(losses, weights);
            step_loss.edge = loss_edge(weights);

            for (std::size_t i = 0; i < n; ++i) {
                Vec gz = ce_logit_grad(logits[i], labels[i].id);
                for (double& g : gz) g *= weights[i] * inv_n;
                accumulate_logit_grad(head, set.features[idx[i]], gz, grad);
            }
            if (config.edge_grad_flow && config.lambda3 > 0.0) {
                const Vec vgrad = loss_edge_grad(weights);
                for (std::size_t i = 0; i < n; ++i) {
                    const double dv = reweight_derivative(regions[i], losses[i], gfn);
                    if (dv == 0.0) continue;
                    const double chain = config.lambda3 * vgrad[i] * dv;
                    Vec gz = ce_logit_grad(logits[i], labels[i].id);
                    for (double& g : gz) g *= chain;
                    accumulate_logit_grad(head, set.features[idx[i]], gz, grad);
                }
            }

            for (std::size_t i = 0; i < n; ++i) {
                weight_sum += weights[i];
                ++weight_count;
                switch (regions[i]) {
                    case Region::high: ++report.weights.n_high; break;
                    case Region::low: ++report.weights.n_low; break;
                    case Region::central: ++report.weights.n_central; break;
                }
            }
        }

        if (config.ccva_enabled) {
            double aug_acc = 0.0;
            const double aug_scale =
                config.lambda4 /
                (static_cast<double>(V) * static_cast<double>(config.ccva_n_aug));
            for (std::size_t v = 0; v < V; ++v) {
                const std::uint32_t cid = static_cast<std::uint32_t>(B + v);
                const std::vector<Vec> draws =
                    sample_augmented(aug_specs.at(cid), config.ccva_n_aug,
                                     stream_seed(seed, "augmentation",
                                                 step * C + cid));
                std::vector<Vec> alogits;
                alogits.reserve(draws.size());
                for (const Vec& x : draws) alogits.push_back(head.logits(x));
                aug_acc += loss_aug(alogits, ClassId{cid, Partition::novel});
                for (std::size_t a = 0; a < draws.size(); ++a) {
                    Vec gz = ce_logit_grad(alogits[a], cid);
                    for (double& g : gz) g *= aug_scale;
                    accumulate_logit_grad(head, draws[a], gz, grad);
                }
            }
            step_loss.aug = aug_acc / static_cast<double>(V);
        }

        step_loss.total = step_loss.cls;
        if (fdbo_active) step_loss.total += step_loss.cls_w + config.lambda3 * step_loss.edge;
        if (config.ccva_enabled) step_loss.total += config.lambda4 * step_loss.aug;
        report.loss_curve.push_back(step_loss);

        apply_grad(head, grad, config.lr_finetune);
    }

    report.weights.mean_weight =
        weight_count == 0 ? 1.0 : weight_sum / static_cast<double>(weight_count);
    report.accuracy = evaluate(head, source, config.eval_n_test, seed);
    return result;
}

Accuracy evaluate(const LinearHead& head, const FeatureSource& source, std::size_t n_test,
                  std::uint64_t seed) {
    if (n_test == 0) throw EmptyInputError("evaluate: n_test must be >= 1");
    std::mt19937_64 rng = make_stream(seed, "eval");
    Accuracy acc;
    for (std::uint32_t c = 0; c < source.class_count(); ++c) {
        const bool is_base = c < source.base_count();
        for (std::size_t t = 0; t < n_test; ++t) {
            const Vec x = source.draw(c, rng);
            const bool correct = argmax_lowest(head.logits(x)) == c;
            if (is_base) {
                ++acc.base_total;
                acc.base_correct += correct ? 1 : 0;
            } else {
                ++acc.novel_total;
                acc.novel_correct += correct ? 1 : 0;
            }
        }
    }
    acc.novel = acc.novel_total ? static_cast<double>(acc.novel_correct) /
                                      static_cast<double>(acc.novel_total)
                                : 0.0;
    acc.base = acc.base_total ? static_cast<double>(acc.base_correct) /
                                    static_cast<double>(acc.base_total)
                              : 0.0;
    const std::uint64_t total = acc.novel_total + acc.base_total;
    acc.overall = total ? static_cast<double>(acc.novel_correct + acc.base_correct) /
                              static_cast<double>(total)
                        : 0.0;
    return acc;
}

// ---- ablation -------------------------------------------------------------

namespace {

const std::vector<std::string> kKnownAxes = {"lrsamples", "shots", "g",
                                             "eta",       "d_in",  "components"};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

}  // namespace

Grid parse_grid(const std::string& spec) {
    Grid grid;
    std::stringstream ss(spec);
    std::string token;
    while (ss >> token) {
        const std::size_t eq = token.find('=');
        if (eq == std::string::npos)
            throw InvalidGridError("grid token '" + token + "' is not axis=v1,v2,...");
        GridAxis axis;
        axis.name = token.substr(0, eq);
        if (std::find(kKnownAxes.begin(), kKnownAxes.end(), axis.name) == kKnownAxes.end())
            throw InvalidGridError("unknown grid axis '" + axis.name + "'");
        for (const GridAxis& existing : grid)
            if (existing.name == axis.name)
                throw InvalidGridError("duplicate grid axis '" + axis.name + "'");
        axis.values = split(token.substr(eq + 1), ',');
        if (axis.values.empty())
            throw InvalidGridError("grid axis '" + axis.name + "' has no values");
        grid.push_back(std::move(axis));
    }
    if (grid.empty()) throw InvalidGridError("empty grid specification");
    return grid;
}

ExperimentConfig apply_cell(ExperimentConfig config, const CellAssignment& cell) {
    for (const auto& [axis, value] : cell) {
        if (axis == "lrsamples") config.set_key("lrsample_count", value);
        else if (axis == "shots") config.set_key("k_shot", value);
        else if (axis == "g") config.set_key("g_family", value);
        else if (axis == "eta") config.set_key("density.eta", value);
        else if (axis == "d_in") config.set_key("density.d_in", value);
        else if (axis == "components") {
            if (value == "none") {
                config.ccva_enabled = false;
                config.fdbo_enabled = false;
            } else if (value == "ccva") {
                config.ccva_enabled = true;
                config.fdbo_enabled = false;
            } else if (value == "fdbo") {
                config.ccva_enabled = false;
                config.fdbo_enabled = true;
            } else if (value == "both") {
                config.ccva_enabled = true;
                config.fdbo_enabled = true;
            } else {
                throw InvalidGridError("components axis value '" + value +
                                       "' (expected none|ccva|fdbo|both)");
            }
        } else {
            throw InvalidGridError("unknown grid axis '" + axis + "'");
        }
    }
    config.validate();
    return config;
}

Aggregate mean_std(const std::vector<double>& values) {
    Aggregate agg;
    if (values.empty()) return agg;
    for (double v : values) agg.mean += v;
    agg.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - agg.mean) * (v - agg.mean);
    agg.std = std::sqrt(var / static_cast<double>(values.size()));
    return agg;
}

AblationResult run_ablation(const ExperimentConfig& config, const Grid& grid,
                            const EmpiricalSource* file_source) {
    if (grid.empty()) throw InvalidGridError("empty grid");
    config.validate();

    // Cartesian product in grid order.
    std::vector<CellAssignment> cells;
    cells.emplace_back();
    for (const GridAxis& axis : grid) {
        std::vector<CellAssignment> next;
        for (const CellAssignment& partial : cells)
            for (const std::string& value : axis.values) {
                CellAssignment extended = partial;
                extended.emplace_back(axis.name, value);
                next.push_back(std::move(extended));
            }
        cells = std::move(next);
    }

    AblationResult result;
    result.grid = grid;
    result.cells.reserve(cells.size());
    for (const CellAssignment& cell : cells) {
        AblationCell out;
        out.assignment = cell;
        std::string label;
        for (const auto& [axis, value] : cell) {
            if (!label.empty()) label += ",";
            label += axis + "=" + value;
        }
        out.label = label;
        out.k_shot = apply_cell(config, cell).k_shot;
        result.cells.push_back(std::move(out));
    }

    // Base artifacts per seed are shared across cells: no grid axis touches
    // the base stage.
    for (const std::uint64_t seed : config.seeds) {
        SyntheticWorld world;
        const FeatureSource* source = file_source;
        if (source == nullptr) {
            world = generate_world(config, seed);
            source = &world;
        }
        const BaseArtifacts base = base_train(*source, config, seed);
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const ExperimentConfig cell_config = apply_cell(config, cells[ci]);
            const FineTuneResult ft = fine_tune(base, *source, cell_config, seed);
            result.cells[ci].novel_per_seed.push_back(ft.report.accuracy.novel);
            result.cells[ci].base_per_seed.push_back(ft.report.accuracy.base);
            result.cells[ci].overall_per_seed.push_back(ft.report.accuracy.overall);
        }
    }
    for (AblationCell& cell : result.cells) {
        cell.novel_acc = mean_std(cell.novel_per_seed);
        cell.base_acc = mean_std(cell.base_per_seed);
        cell.overall_acc = mean_std(cell.overall_per_seed);
    }
    return result;
}

}  // namespace lrcalib
