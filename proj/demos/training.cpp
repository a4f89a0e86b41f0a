// Minimal rotation-recovery comparison: unconstrained 9-entry head against
// the six_d head, same data and optimizer. Prints the eval trajectory.

#include <cstdio>

#include <rotlearn/rotlearn.hpp>

using namespace rotlearn;

int main() {
    TrainConfig cfg;
    cfg.steps = 600;
    cfg.batch = 32;
    cfg.lr = 1e-3;
    cfg.eval_every = 100;
    cfg.eval_samples = 128;
    cfg.hidden = {64, 64};
    cfg.seed = 42;

    for (Head head : {Head::prom, Head::six_d}) {
        const RunRecord rec = train_rotation_recovery(head, LossConfig{}, cfg);
        std::printf("head %s:\n", head_name(head));
        for (const StepRow& row : rec.rows)
            if (row.has_eval)
                std::printf("  step %5ld  loss %.5f  eval %.3f deg\n", row.step,
                            row.total_loss, row.eval_deg);
        std::printf("  final: %.3f deg (mean over %d held-out targets)\n\n",
                    rec.final_eval.mean, cfg.eval_samples);
    }
    return 0;
}
