#include "tandem/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tandem {

void TrainConfig::validate() const {
    encoder.validate();
    if (learning_rate < 0.0) throw DataError("train: learning_rate must be >= 0");
    if (batch_size < 1) throw DataError("train: batch_size must be >= 1");
    if (epochs < 1) throw DataError("train: epochs must be >= 1");
    if (!(dev_ratio > 0.0 && dev_ratio < 1.0)) throw DataError("train: dev_ratio must be in (0,1)");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw DataError("train: betas must be in [0,1)");
    }
    if (adam_eps <= 0.0) throw DataError("train: adam_eps must be positive");
}

AdamState AdamState::like(const ModelParams& params) {
    AdamState s;
    s.m = zeros_like_params(params);
    s.v = zeros_like_params(params);
    return s;
}

void adam_step(ParamRefs& params, std::span<const Tensor> grads, AdamState& state, const TrainConfig& cfg) {
    if (grads.size() != params.tensors.size()) {
        throw std::invalid_argument("adam_step: gradient count does not match parameter count");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < grads.size(); ++k) {
        Tensor& theta = *params.tensors[k];
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        const Tensor& g = grads[k];
        require_same_shape(theta, g, "adam_step");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            if (!std::isfinite(g[i])) {
                throw NumericError("adam_step: non-finite gradient in " + params.names[k]);
            }
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

TrainResult train(std::span<const Record> data, const TrainConfig& cfg) {
    cfg.validate();

    const Vocab vocab = Vocab::build(data, cfg.vocab_min_count);
    ModelConfig mc;
    mc.variant = cfg.variant;
    mc.encoder = cfg.encoder;
    mc.vocab_size = vocab.size();
    mc.seed = cfg.seed;

    Rng init_rng(Rng::derive(cfg.seed, 0));
    ModelParams params = init_model(mc, init_rng);
    if (!cfg.embeddings_path.empty()) {
        load_pretrained_embeddings(cfg.embeddings_path, vocab, params.encoder.token_emb);
    }

    Rng split_rng(Rng::derive(cfg.seed, 1));
    auto [train_set, dev_set] = split_train_dev(data, 1.0 - cfg.dev_ratio, split_rng);

    Rng shuffle_rng(Rng::derive(cfg.seed, 2));
    AdamState adam = AdamState::like(params);
    ParamRefs refs = ParamRefs::of(params);

    TrainResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto batches = make_batches(train_set, vocab, cfg.batch_size, cfg.encoder.n_max, shuffle_rng);
        LossParts epoch_loss;
        long seen = 0;
        for (const Batch& batch : batches) {
            BatchGrad bg = batch_grad(mc, params, batch, cfg.parallel);
            adam_step(refs, bg.grads, adam, cfg);
            epoch_loss.total += bg.loss.total * batch.batch_size;
            epoch_loss.bce += bg.loss.bce * batch.batch_size;
            epoch_loss.ce += bg.loss.ce * batch.batch_size;
            seen += batch.batch_size;
        }
        epoch_loss.total /= static_cast<double>(seen);
        epoch_loss.bce /= static_cast<double>(seen);
        epoch_loss.ce /= static_cast<double>(seen);

        EpochStats stats;
        stats.train_loss = epoch_loss;
        stats.dev_metrics = evaluate(mc, params, vocab, dev_set, cfg.parallel);
        result.history.epochs.push_back(std::move(stats));
    }

    result.model = TrainedModel{mc, std::move(params), vocab};
    return result;
}

namespace {

std::string format_loss(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string format_metric(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}

void append_report_columns(std::ostringstream& out, const MetricsReport& r) {
    auto col = [&](const std::optional<double>& v) { out << '\t' << format_metric(v); };
    if (r.sarcasm) {
        col(r.sarcasm->precision);
        col(r.sarcasm->recall);
        col(r.sarcasm->accuracy);
        col(r.sarcasm->f1);
        col(r.f1_sarc);
    } else {
        for (int i = 0; i < 5; ++i) col(std::nullopt);
    }
    if (r.sentiment) {
        col(r.sentiment->precision);
        col(r.sentiment->recall);
        col(r.sentiment->accuracy);
        col(r.sentiment->f1);
        col(r.f1_pn);
    } else {
        for (int i = 0; i < 5; ++i) col(std::nullopt);
    }
}

}  // namespace

std::string history_tsv(const TrainHistory& history, const TrainConfig& cfg) {
    std::ostringstream out;
    out << "# seed=" << cfg.seed << " variant=" << to_string(cfg.variant) << "\n";
    out << "epoch\tloss_total\tloss_bce\tloss_ce"
           "\tdev_sarc_precision\tdev_sarc_recall\tdev_sarc_accuracy\tdev_sarc_f1\tdev_f1_sarc"
           "\tdev_sent_precision\tdev_sent_recall\tdev_sent_accuracy\tdev_sent_f1\tdev_f1_pn\n";
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const EpochStats& s = history.epochs[e];
        out << (e + 1) << '\t' << format_loss(s.train_loss.total) << '\t' << format_loss(s.train_loss.bce) << '\t'
            << format_loss(s.train_loss.ce);
        append_report_columns(out, s.dev_metrics);
        out << '\n';
    }
    return out.str();
}

void write_run_dir(const std::string& dir, const TrainConfig& cfg, const TrainResult& result,
                   const std::string& data_path) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::json snap;
    snap["variant"] = to_string(cfg.variant);
    snap["encoder"] = to_string(cfg.encoder.kind);
    snap["d"] = cfg.encoder.d;
    snap["layers"] = cfg.encoder.layers;
    snap["heads"] = cfg.encoder.heads;
    snap["n_max"] = cfg.encoder.n_max;
    snap["learning_rate"] = cfg.learning_rate;
    snap["batch_size"] = cfg.batch_size;
    snap["epochs"] = cfg.epochs;
    snap["beta1"] = cfg.beta1;
    snap["beta2"] = cfg.beta2;
    snap["adam_eps"] = cfg.adam_eps;
    snap["dev_ratio"] = cfg.dev_ratio;
    snap["vocab_min_count"] = cfg.vocab_min_count;
    snap["seed"] = cfg.seed;
    snap["embeddings_path"] = cfg.embeddings_path;
    snap["data_path"] = data_path;
    snap["vocab_size"] = result.model.config.vocab_size;
    {
        std::ofstream out(fs::path(dir) / "config.snapshot", std::ios::binary);
        if (!out) throw DataError("cannot write config snapshot under '" + dir + "'");
        out << snap.dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "history.tsv", std::ios::binary);
        if (!out) throw DataError("cannot write history under '" + dir + "'");
        out << history_tsv(result.history, cfg);
    }
    save_checkpoint((fs::path(dir) / "checkpoint.final").string(), result.model);
}

}  // namespace tandem
