#include "tandem/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace tandem {

namespace {

constexpr char kMagic[8] = {'T', 'N', 'D', 'M', 'C', 'K', 'P', '1'};

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::string get_string(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

}  // namespace

ModelParams zeros_model(const ModelConfig& cfg) {
    Rng rng(0);
    ModelParams p = init_model(cfg, rng);
    p.visit([](const std::string&, Tensor& t) { t.fill(0.0); });
    return p;
}

void save_checkpoint(const std::string& path, const TrainedModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    put_string(out, to_string(model.config.variant));
    put_string(out, to_string(model.config.encoder.kind));
    put_u32(out, static_cast<std::uint32_t>(model.config.encoder.d));
    put_u32(out, static_cast<std::uint32_t>(model.config.encoder.layers));
    put_u32(out, static_cast<std::uint32_t>(model.config.encoder.heads));
    put_u32(out, static_cast<std::uint32_t>(model.config.encoder.n_max));
    put_u32(out, static_cast<std::uint32_t>(model.config.vocab_size));
    put_u64(out, model.config.seed);

    put_u32(out, static_cast<std::uint32_t>(model.vocab.size()));
    for (int i = 0; i < model.vocab.size(); ++i) put_string(out, model.vocab.token_of(i));

    std::uint32_t n_tensors = 0;
    model.params.visit([&](const std::string&, const Tensor&) { ++n_tensors; });
    put_u32(out, n_tensors);
    model.params.visit([&](const std::string& name, const Tensor& t) {
        put_string(out, name);
        put_u32(out, static_cast<std::uint32_t>(t.rows()));
        put_u32(out, static_cast<std::uint32_t>(t.cols()));
        out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    });
    if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw DataError("'" + path + "' is not a checkpoint file");
    }

    TrainedModel model;
    model.config.variant = variant_from_string(get_string(in));
    model.config.encoder.kind = encoder_kind_from_string(get_string(in));
    model.config.encoder.d = static_cast<int>(get_u32(in));
    model.config.encoder.layers = static_cast<int>(get_u32(in));
    model.config.encoder.heads = static_cast<int>(get_u32(in));
    model.config.encoder.n_max = static_cast<int>(get_u32(in));
    model.config.vocab_size = static_cast<int>(get_u32(in));
    model.config.seed = get_u64(in);

    const std::uint32_t n_tokens = get_u32(in);
    if (n_tokens < 3) throw DataError("checkpoint '" + path + "': vocab too small");
    for (std::uint32_t i = 0; i < n_tokens; ++i) {
        const std::string tok = get_string(in);
        if (i < 3) {
            if (tok != model.vocab.token_of(static_cast<int>(i))) {
                throw DataError("checkpoint '" + path + "': reserved vocab entry mismatch at id " + std::to_string(i));
            }
        } else {
            model.vocab.add(tok);
        }
    }
    if (model.vocab.size() != model.config.vocab_size) {
        throw DataError("checkpoint '" + path + "': vocab size does not match manifest");
    }

    model.params = zeros_model(model.config);
    const std::uint32_t n_tensors = get_u32(in);
    std::uint32_t seen = 0;
    model.params.visit([&](const std::string& name, Tensor& t) {
        if (seen++ >= n_tensors) throw DataError("checkpoint '" + path + "': missing tensor " + name);
        const std::string stored = get_string(in);
        if (stored != name) {
            throw DataError("checkpoint '" + path + "': expected tensor " + name + ", found " + stored);
        }
        const int rows = static_cast<int>(get_u32(in));
        const int cols = static_cast<int>(get_u32(in));
        if (rows != t.rows() || cols != t.cols()) {
            throw DataError("checkpoint '" + path + "': tensor " + name + " has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", expected " + t.shape_str());
        }
        in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    });
    if (seen != n_tensors) throw DataError("checkpoint '" + path + "': extra tensors present");
    if (!in) throw DataError("checkpoint '" + path + "': truncated file");
    return model;
}

}  // namespace tandem
