// Compares the serial reference path against the OpenMP path for batch
// gradient computation and forward-only evaluation, and verifies that both
// produce bit-identical results.

#include <chrono>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "tandem/model.hpp"
#include "tandem/model_gradcheck.hpp"
#include "tandem/parallel.hpp"

using namespace tandem;

namespace {

double time_ms(const std::function<void()>& fn, int repeats) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / repeats;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP benchmark for batch gradients"};
    int d = 64, layers = 2, heads = 4, n_max = 32, batch = 64, vocab = 500, repeats = 5;
    std::uint64_t seed = 0;
    app.add_option("--d", d)->capture_default_str();
    app.add_option("--layers", layers)->capture_default_str();
    app.add_option("--heads", heads)->capture_default_str();
    app.add_option("--nmax", n_max)->capture_default_str();
    app.add_option("--batch", batch)->capture_default_str();
    app.add_option("--vocab", vocab)->capture_default_str();
    app.add_option("--repeats", repeats)->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    ModelConfig cfg;
    cfg.variant = VariantKind::mtl_attinter;
    cfg.encoder.d = d;
    cfg.encoder.layers = layers;
    cfg.encoder.heads = heads;
    cfg.encoder.n_max = n_max;
    cfg.vocab_size = vocab;
    cfg.seed = seed;

    Rng rng(Rng::derive(seed, 0));
    const ModelParams params = init_model(cfg, rng);
    const Batch b = random_batch(cfg, batch, Rng::derive(seed, 1));

    std::printf("model: d=%d layers=%d heads=%d n_max=%d batch=%d, OpenMP threads: %d\n", d, layers, heads, n_max,
                batch, par::max_threads());

    const BatchGrad serial = batch_grad(cfg, params, b, /*parallel=*/false);
    const BatchGrad parallel = batch_grad(cfg, params, b, /*parallel=*/true);
    bool identical = serial.grads.size() == parallel.grads.size();
    for (std::size_t k = 0; identical && k < serial.grads.size(); ++k) {
        identical = serial.grads[k] == parallel.grads[k];
    }
    std::printf("serial and OpenMP gradients bit-identical: %s\n", identical ? "yes" : "NO");

    const double t_serial = time_ms([&] { batch_grad(cfg, params, b, false); }, repeats);
    const double t_parallel = time_ms([&] { batch_grad(cfg, params, b, true); }, repeats);
    std::printf("batch_grad:     serial %8.2f ms   openmp %8.2f ms   speedup %.2fx\n", t_serial, t_parallel,
                t_serial / t_parallel);

    const double f_serial = time_ms([&] { batch_outputs(cfg, params, b, false); }, repeats);
    const double f_parallel = time_ms([&] { batch_outputs(cfg, params, b, true); }, repeats);
    std::printf("batch_outputs:  serial %8.2f ms   openmp %8.2f ms   speedup %.2fx\n", f_serial, f_parallel,
                f_serial / f_parallel);

    return identical ? 0 : 1;
}
