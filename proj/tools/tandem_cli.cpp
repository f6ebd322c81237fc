// Command-line front end: synth, train, eval, ablate, gradcheck.

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tandem/ablation.hpp"
#include "tandem/checkpoint.hpp"
#include "tandem/data.hpp"
#include "tandem/metrics.hpp"
#include "tandem/model_gradcheck.hpp"
#include "tandem/train.hpp"

namespace {

namespace fs = std::filesystem;
using namespace tandem;

struct TrainFlags {
    std::string variant = "mtl_attinter";
    std::string encoder = "tiny_transformer";
    int d = 64;
    int layers = 2;
    int heads = 4;
    int n_max = 64;
    double lr = 1e-3;
    int batch_size = 64;
    int epochs = 5;
    double dev_ratio = 0.2;
    int min_count = 1;
    std::uint64_t seed = 0;
    bool serial = false;
    std::string embeddings;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--variant", f.variant,
                    "model variant: st_sent|st_sarc|st_att_sent|st_att_sarc|mtl|mtl_att|mtl_attinter")
        ->capture_default_str();
    cmd->add_option("--encoder", f.encoder, "encoder kind: tiny_transformer|bag_of_embeddings")->capture_default_str();
    cmd->add_option("--d", f.d, "hidden dimension")->capture_default_str();
    cmd->add_option("--layers", f.layers, "transformer layers")->capture_default_str();
    cmd->add_option("--heads", f.heads, "attention heads")->capture_default_str();
    cmd->add_option("--nmax", f.n_max, "maximum sequence length incl. CLS")->capture_default_str();
    cmd->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
    cmd->add_option("--batch-size", f.batch_size, "batch size")->capture_default_str();
    cmd->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--dev-ratio", f.dev_ratio, "fraction of data held out as dev")->capture_default_str();
    cmd->add_option("--min-count", f.min_count, "vocabulary frequency cutoff")->capture_default_str();
    cmd->add_option("--seed", f.seed, "run seed")->capture_default_str();
    cmd->add_option("--embeddings", f.embeddings, "optional pretrained token-embedding file");
    cmd->add_flag("--serial", f.serial, "disable OpenMP parallelism");
}

TrainConfig to_config(const TrainFlags& f) {
    TrainConfig cfg;
    cfg.variant = variant_from_string(f.variant);
    cfg.encoder.kind = encoder_kind_from_string(f.encoder);
    cfg.encoder.d = f.d;
    cfg.encoder.layers = f.layers;
    cfg.encoder.heads = f.heads;
    cfg.encoder.n_max = f.n_max;
    cfg.learning_rate = f.lr;
    cfg.batch_size = f.batch_size;
    cfg.epochs = f.epochs;
    cfg.dev_ratio = f.dev_ratio;
    cfg.vocab_min_count = f.min_count;
    cfg.seed = f.seed;
    cfg.parallel = !f.serial;
    cfg.embeddings_path = f.embeddings;
    return cfg;
}

std::string dev_summary(const MetricsReport& r) {
    std::ostringstream out;
    char buf[48];
    if (r.f1_sarc) {
        std::snprintf(buf, sizeof(buf), " dev_f1_sarc=%.4f", *r.f1_sarc);
        out << buf;
    }
    if (r.f1_pn) {
        std::snprintf(buf, sizeof(buf), " dev_f1_pn=%.4f", *r.f1_pn);
        out << buf;
    }
    return out.str();
}

int run_synth(const SynthConfig& cfg, const std::string& out_path) {
    const auto records = synth_generate(cfg);
    std::ostringstream header;
    header << "tandem synth seed=" << cfg.seed << " n=" << cfg.n_examples << " vocab_size=" << cfg.vocab_size
           << " max_len=" << cfg.max_len << " p_sarcastic=" << cfg.p_sarcastic << " p_neg_given_sarc="
           << cfg.p_neg_given_sarc << " signal_strength=" << cfg.signal_strength;
    write_dataset(out_path, records, header.str());
    std::printf("wrote %zu records to %s\n", records.size(), out_path.c_str());
    return 0;
}

int run_train(const TrainFlags& flags, const std::string& data_path, const std::string& run_dir) {
    const auto records = parse_dataset(data_path);
    std::printf("parsed %zu records from %s\n", records.size(), data_path.c_str());
    const TrainConfig cfg = to_config(flags);
    const TrainResult result = train(records, cfg);
    for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
        const EpochStats& s = result.history.epochs[e];
        std::printf("epoch %zu: loss=%.6f (bce=%.6f ce=%.6f)%s\n", e + 1, s.train_loss.total, s.train_loss.bce,
                    s.train_loss.ce, dev_summary(s.dev_metrics).c_str());
    }
    write_run_dir(run_dir, cfg, result, data_path);
    std::printf("run directory: %s\n", run_dir.c_str());
    return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_path, const std::string& out_dir,
             bool serial) {
    const TrainedModel model = load_checkpoint(checkpoint_path);
    const auto records = parse_dataset(data_path);
    std::printf("parsed %zu records from %s\n", records.size(), data_path.c_str());
    const MetricsReport report = evaluate(model, records, !serial);
    std::printf("variant %s, seed %llu\n%s", to_string(model.config.variant),
                static_cast<unsigned long long>(model.config.seed), format_report(report).c_str());
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ostringstream header;
        header << "tandem eval checkpoint=" << checkpoint_path << " data=" << data_path << " seed="
               << model.config.seed;
        write_report_tsv((fs::path(out_dir) / "report.tsv").string(), report, header.str());
        if (report.sarcasm) write_confusion_tsv((fs::path(out_dir) / "cm_sarcasm.tsv").string(), report.sarcasm->cm);
        if (report.sentiment) {
            write_confusion_tsv((fs::path(out_dir) / "cm_sentiment.tsv").string(), report.sentiment->cm);
            write_confusion_tsv((fs::path(out_dir) / "cm_sentiment_sarcastic.tsv").string(), *report.sent_given_sarc);
            write_confusion_tsv((fs::path(out_dir) / "cm_sentiment_nonsarcastic.tsv").string(),
                                *report.sent_given_nonsarc);
        }
        std::printf("reports written under %s\n", out_dir.c_str());
    }
    return 0;
}

int run_ablate(const TrainFlags& flags, const std::string& data_path, const std::string& test_path,
               const std::string& out_dir, const std::vector<std::uint64_t>& seeds,
               const std::vector<std::string>& row_names) {
    const auto train_records = parse_dataset(data_path);
    const auto test_records = parse_dataset(test_path);
    std::printf("parsed %zu train / %zu test records\n", train_records.size(), test_records.size());

    std::vector<AblationRow> rows;
    if (row_names.empty()) {
        rows.assign(kAllAblationRows.begin(), kAllAblationRows.end());
    } else {
        for (const std::string& name : row_names) rows.push_back(ablation_row_from_string(name));
    }

    const TrainConfig base = to_config(flags);
    const AblationTable table = ablation_run(train_records, test_records, rows, seeds, base);
    std::printf("%s", format_ablation(table).c_str());
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ostringstream header;
        header << "tandem ablate data=" << data_path << " test=" << test_path << " seeds=";
        for (std::size_t i = 0; i < seeds.size(); ++i) header << (i ? "," : "") << seeds[i];
        write_ablation_tsv((fs::path(out_dir) / "ablation.tsv").string(), table, header.str());
        std::ofstream txt(fs::path(out_dir) / "ablation.txt", std::ios::binary);
        txt << format_ablation(table);
        std::printf("tables written under %s\n", out_dir.c_str());
    }
    return 0;
}

int run_gradcheck(const TrainFlags& flags, int vocab, int batch, double eps) {
    ModelConfig cfg;
    cfg.variant = variant_from_string(flags.variant);
    cfg.encoder.kind = encoder_kind_from_string(flags.encoder);
    cfg.encoder.d = flags.d;
    cfg.encoder.layers = flags.layers;
    cfg.encoder.heads = flags.heads;
    cfg.encoder.n_max = flags.n_max;
    cfg.vocab_size = vocab;
    cfg.seed = flags.seed;
    const ModelGradCheck check = check_model_gradients(cfg, batch, flags.seed, eps, !flags.serial);
    for (const auto& [group, err] : check.per_group) {
        std::printf("%-12s max rel err %.3e\n", group.c_str(), err);
    }
    std::printf("overall: %s\n", check.overall.describe().c_str());
    if (check.overall.max_rel_err > 1e-4) {
        std::fprintf(stderr, "gradcheck FAILED: max relative error %.3e > 1e-4\n", check.overall.max_rel_err);
        return 3;
    }
    std::printf("gradcheck OK\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-task sentiment + sarcasm trainer"};
    app.require_subcommand(1);

    // synth
    SynthConfig synth_cfg;
    std::string synth_out;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted correlation");
    synth->add_option("--out", synth_out, "output TSV path")->required();
    synth->add_option("--n", synth_cfg.n_examples, "number of examples")->capture_default_str();
    synth->add_option("--vocab-size", synth_cfg.vocab_size, "number of noise words")->capture_default_str();
    synth->add_option("--max-len", synth_cfg.max_len, "maximum text length in tokens")->capture_default_str();
    synth->add_option("--p-sarcastic", synth_cfg.p_sarcastic, "P(sarcastic)")->capture_default_str();
    synth->add_option("--p-neg-given-sarc", synth_cfg.p_neg_given_sarc, "P(negative | sarcastic)")
        ->capture_default_str();
    synth->add_option("--signal-strength", synth_cfg.signal_strength, "indicator-token rate per position")
        ->capture_default_str();
    synth->add_option("--seed", synth_cfg.seed, "generator seed")->capture_default_str();

    // train
    TrainFlags train_flags;
    std::string train_data, train_run_dir;
    CLI::App* train_cmd = app.add_subcommand("train", "train one variant and write a run directory");
    train_cmd->add_option("--data", train_data, "training TSV")->required();
    train_cmd->add_option("--run-dir", train_run_dir, "output run directory")->required();
    add_train_flags(train_cmd, train_flags);

    // eval
    std::string eval_checkpoint, eval_data, eval_out;
    bool eval_serial = false;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "evaluation TSV")->required();
    eval_cmd->add_option("--out-dir", eval_out, "write report + confusion TSVs here");
    eval_cmd->add_flag("--serial", eval_serial, "disable OpenMP parallelism");

    // ablate
    TrainFlags ablate_flags;
    std::string ablate_data, ablate_test, ablate_out;
    std::vector<std::uint64_t> ablate_seeds = {1, 2, 3, 4, 5};
    std::vector<std::string> ablate_rows;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the variant-by-seed comparison grid");
    ablate_cmd->add_option("--data", ablate_data, "training TSV")->required();
    ablate_cmd->add_option("--test", ablate_test, "test TSV")->required();
    ablate_cmd->add_option("--out-dir", ablate_out, "write ablation.tsv / ablation.txt here");
    ablate_cmd->add_option("--seeds", ablate_seeds, "run seeds")->delimiter(',')->capture_default_str();
    ablate_cmd->add_option("--rows", ablate_rows, "table rows (default: ST,ST_ATT,MTL,MTL_ATT,MTL_ATTINTER)")
        ->delimiter(',');
    add_train_flags(ablate_cmd, ablate_flags);

    // gradcheck
    TrainFlags grad_flags;
    grad_flags.d = 8;
    grad_flags.n_max = 6;
    grad_flags.layers = 1;
    grad_flags.heads = 2;
    int grad_vocab = 50;
    int grad_batch = 4;
    double grad_eps = 1e-4;
    CLI::App* grad_cmd = app.add_subcommand("gradcheck", "compare tape gradients against central differences");
    grad_cmd->add_option("--d", grad_flags.d, "hidden dimension")->capture_default_str();
    grad_cmd->add_option("--nmax", grad_flags.n_max, "maximum sequence length")->capture_default_str();
    grad_cmd->add_option("--vocab", grad_vocab, "vocabulary size")->capture_default_str();
    grad_cmd->add_option("--batch", grad_batch, "batch size")->capture_default_str();
    grad_cmd->add_option("--layers", grad_flags.layers, "transformer layers")->capture_default_str();
    grad_cmd->add_option("--heads", grad_flags.heads, "attention heads")->capture_default_str();
    grad_cmd->add_option("--variant", grad_flags.variant, "model variant")->capture_default_str();
    grad_cmd->add_option("--encoder", grad_flags.encoder, "encoder kind")->capture_default_str();
    grad_cmd->add_option("--seed", grad_flags.seed, "seed")->capture_default_str();
    grad_cmd->add_option("--eps", grad_eps,
                         "central-difference step; shrink it if a relu kink sits within eps of zero")
        ->capture_default_str();
    grad_cmd->add_flag("--serial", grad_flags.serial, "disable OpenMP parallelism");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth_cfg, synth_out);
        if (train_cmd->parsed()) return run_train(train_flags, train_data, train_run_dir);
        if (eval_cmd->parsed()) return run_eval(eval_checkpoint, eval_data, eval_out, eval_serial);
        if (ablate_cmd->parsed()) return run_ablate(ablate_flags, ablate_data, ablate_test, ablate_out, ablate_seeds,
                                                    ablate_rows);
        if (grad_cmd->parsed()) return run_gradcheck(grad_flags, grad_vocab, grad_batch, grad_eps);
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
