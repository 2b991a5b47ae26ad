// Trains the same network twice on a noisy Gaussian dataset: once on every
// sample with its given label, once with drop / reuse / relabel selection.
#include <cstdio>

#include "crssc/metrics.hpp"
#include "crssc/noisegen.hpp"
#include "crssc/trainer.hpp"

int main() {
    crssc::NoiseConfig noise;  // 10 classes, 2 irrelevant clusters, 20% flipped labels
    noise.seed = 7;
    const crssc::GeneratedData data = crssc::generate(noise);

    crssc::TrainConfig cfg;
    cfg.max_epochs = 30;
    cfg.seed = 7;
    crssc::TrainConfig plain = cfg;
    plain.warmup_epochs = plain.max_epochs;

    const auto baseline = crssc::train(data.train, data.test, plain);
    const auto selective = crssc::train(data.train, data.test, cfg);

    const crssc::ProvenanceIndex prov(data.train);
    const auto diags = crssc::diagnose_run(selective.logs, prov);
    std::printf("epoch  plain_acc  selective_acc  dropped  reusable  selection_acc\n");
    for (std::size_t i = 0; i < diags.size(); i += 5) {
        const auto& d = diags[i];
        std::printf("%5lld  %9.3f  %13.3f  %7.3f  %8.3f  %13s\n", static_cast<long long>(d.epoch),
                    *baseline.logs[i].test_accuracy, *d.test_accuracy, d.ratio_dropped, d.ratio_reusable,
                    d.selection_accuracy ? std::to_string(*d.selection_accuracy).substr(0, 5).c_str() : "-");
    }
}
