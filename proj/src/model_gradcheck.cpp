#include "tandem/model_gradcheck.hpp"

#include <algorithm>
#include <map>

#include "tandem/rng.hpp"

namespace tandem {

Batch random_batch(const ModelConfig& cfg, int batch_size, std::uint64_t seed) {
    Rng rng(seed);
    const int n_max = cfg.encoder.n_max;
    Batch batch;
    batch.batch_size = batch_size;
    batch.n_max = n_max;
    batch.token_ids.assign(static_cast<std::size_t>(batch_size) * n_max, Vocab::kPad);
    batch.mask.assign(static_cast<std::size_t>(batch_size) * n_max, 0);
    batch.y_sent.resize(batch_size);
    batch.y_sarc.resize(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const int real = 1 + rng.below(n_max);  // CLS plus [0, n_max-1) tokens
        batch.token_ids[static_cast<std::size_t>(i) * n_max] = Vocab::kCls;
        batch.mask[static_cast<std::size_t>(i) * n_max] = 1;
        for (int j = 1; j < real; ++j) {
            batch.token_ids[static_cast<std::size_t>(i) * n_max + j] = 3 + rng.below(std::max(1, cfg.vocab_size - 3));
            batch.mask[static_cast<std::size_t>(i) * n_max + j] = 1;
        }
        batch.y_sent[i] = rng.below(3);
        batch.y_sarc[i] = rng.below(2);
    }
    return batch;
}

namespace {

// Serial batch-mean loss at the given parameter values; the coordinate loop
// of finite_diff_check provides the parallelism.
double batch_mean_loss(const ModelConfig& cfg, const ModelParams& base, std::span<const Tensor> values,
                       const Batch& batch) {
    ModelParams params = base;
    std::size_t k = 0;
    params.visit([&](const std::string&, Tensor& t) { t = values[k++]; });
    double total = 0.0;
    for (int i = 0; i < batch.batch_size; ++i) {
        Tape tape;
        ModelVars vars = bind(tape, params);
        RowView row{batch.ids_row(i), batch.mask_row(i), batch.y_sent[i], batch.y_sarc[i]};
        ExampleNodes nodes = forward_example(cfg, vars, row);
        total += nodes.loss.value().item();
    }
    return total / batch.batch_size;
}

}  // namespace

ModelGradCheck check_model_gradients(const ModelConfig& cfg, int batch_size, std::uint64_t seed, double eps,
                                     bool parallel) {
    Rng init_rng(Rng::derive(seed, 0));
    ModelParams params = init_model(cfg, init_rng);
    const Batch batch = random_batch(cfg, batch_size, Rng::derive(seed, 1));

    const BatchGrad analytic = batch_grad(cfg, params, batch, parallel);

    std::vector<Tensor> values;
    std::vector<std::string> names = param_names(params);
    params.visit([&](const std::string&, const Tensor& t) { values.push_back(t); });

    std::vector<double> per_tensor;
    ModelGradCheck out;
    out.overall = finite_diff_check(
        [&](std::span<const Tensor> v) { return batch_mean_loss(cfg, params, v, batch); }, values, names,
        analytic.grads, eps, parallel, &per_tensor);

    std::map<std::string, double> groups;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string group = names[i].substr(0, names[i].find('.'));
        groups[group] = std::max(groups[group], per_tensor[i]);
    }
    out.per_group.assign(groups.begin(), groups.end());
    return out;
}

}  // namespace tandem
