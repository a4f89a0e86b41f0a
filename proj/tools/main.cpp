// rotcli: command-line front end for the gradient studies and the training
// comparisons. Every subcommand is deterministic under fixed flags and writes
// only inside --out.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <rotlearn/rotlearn.hpp>

namespace fs = std::filesystem;
using namespace rotlearn;

namespace {

struct Common {
    std::uint64_t seed = 42;
    std::string out = "./out";
    int threads = 1;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "base RNG seed")->capture_default_str();
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker threads (one run per thread)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

fs::path ensure_outdir(const Common& c) {
    fs::path dir(c.out);
    fs::create_directories(dir);
    return dir;
}

// %g for parameter-valued columns and file names; measurements use fmt().
std::string fmt_g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return std::string(buf);
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
    std::vector<Method> ms;
    for (const std::string& n : names) ms.push_back(method_from_name(n));
    if (ms.empty()) throw CLI::ValidationError("--methods", "need at least one method");
    return ms;
}

std::vector<Head> parse_heads(const std::vector<std::string>& names) {
    std::vector<Head> hs;
    for (const std::string& n : names) hs.push_back(head_from_name(n));
    if (hs.empty()) throw CLI::ValidationError("--heads", "need at least one head");
    return hs;
}

/// Snapshot of the resolved configuration, written next to every output set.
void write_run_config(const fs::path& dir, const std::string& subcommand,
                      const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string text = "subcommand=" + subcommand + "\n";
    for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
    write_file((dir / "run_config.txt").string(), text);
}

/// Runs jobs on up to `threads` workers. Jobs only fill preallocated slots;
/// all writing happens on the caller's thread afterwards, in job order.
void run_jobs(std::vector<std::function<void()>>& jobs, int threads) {
    if (threads <= 1 || jobs.size() <= 1) {
        for (auto& j : jobs) j();
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            jobs[i]();
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(jobs.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

std::string join_names(const std::vector<std::string>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ',';
        s += xs[i];
    }
    return s;
}

// ---------------------------------------------------------------------------
// generated plot scripts; static text so reruns stay byte-identical.

const char* kPlotScatter = R"PY(import csv, glob
import matplotlib.pyplot as plt

paths = sorted(glob.glob("scatter_*.csv"))
fig, axes = plt.subplots(1, max(len(paths), 1), figsize=(4 * max(len(paths), 1), 4))
if len(paths) <= 1:
    axes = [axes]
for ax, path in zip(axes, paths):
    xs, ys = [], []
    with open(path) as f:
        for row in csv.DictReader(f):
            xs.append(float(row["x"]))
            ys.append(float(row["y"]))
    ax.scatter(xs, ys, s=2)
    ax.set_title(path)
    ax.set_xlabel("input entry error")
    ax.set_ylabel("pulled-back gradient")
fig.tight_layout()
fig.savefig("scatter.png", dpi=160)
)PY";

const char* kPlotEigen = R"PY(import csv, glob
import matplotlib.pyplot as plt

fig, ax = plt.subplots(figsize=(6, 4))
for path in sorted(glob.glob("eigen_*.csv")):
    vals = []
    with open(path) as f:
        for row in csv.DictReader(f):
            vals.append(max(float(row["lambda_min"]), 1e-300))
    ax.plot(sorted(vals), label=path)
ax.set_yscale("log")
ax.set_xlabel("sample (sorted)")
ax.set_ylabel("lambda_min(B B^T)")
ax.legend()
fig.tight_layout()
fig.savefig("eigen.png", dpi=160)
)PY";

const char* kPlotExplosion = R"PY(import csv
import matplotlib.pyplot as plt

series = {}
with open("explosion.csv") as f:
    for row in csv.DictReader(f):
        series.setdefault(row["method"], []).append((float(row["gap"]), float(row["grad_norm"])))
fig, ax = plt.subplots(figsize=(6, 4))
for method, pts in sorted(series.items()):
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("gap")
ax.set_ylabel("Jacobian norm")
ax.legend()
fig.tight_layout()
fig.savefig("explosion.png", dpi=160)
)PY";

const char* kPlotLrSweep = R"PY(import csv
import matplotlib.pyplot as plt

series = {}
with open("lr_sweep.csv") as f:
    for row in csv.DictReader(f):
        diverged = row["diverged_at"] not in ("", "-1")
        series.setdefault(row["method"], []).append(
            (float(row["lr"]), float(row["final_error"]), diverged))
fig, ax = plt.subplots(figsize=(6, 4))
for method, pts in sorted(series.items()):
    pts.sort()
    ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    bad = [(lr, err) for lr, err, d in pts if d]
    if bad:
        ax.scatter([b[0] for b in bad], [b[1] for b in bad], marker="x", c="red", zorder=3)
ax.set_xscale("log")
ax.set_xlabel("learning rate")
ax.set_ylabel("final geodesic error (deg)")
ax.legend()
fig.tight_layout()
fig.savefig("lr_sweep.png", dpi=160)
)PY";

const char* kPlotTraining = R"PY(import csv, glob
import matplotlib.pyplot as plt

fig, ax = plt.subplots(figsize=(7, 4))
for path in sorted(glob.glob("run_*.csv")):
    steps, errs = [], []
    with open(path) as f:
        for row in csv.DictReader(f):
            if row["eval_geodesic_deg"]:
                steps.append(int(row["step"]))
                errs.append(float(row["eval_geodesic_deg"]))
    if steps:
        ax.plot(steps, errs, label=path)
ax.set_yscale("log")
ax.set_xlabel("step")
ax.set_ylabel("held-out geodesic error (deg)")
ax.legend(fontsize=6)
fig.tight_layout()
fig.savefig("training.png", dpi=160)
)PY";

// ---------------------------------------------------------------------------

void emit_eigen_csvs(const fs::path& dir, const std::vector<Method>& methods, int samples,
                     double sigma, std::uint64_t seed, int threads) {
    std::vector<std::vector<EigenRow>> results(methods.size());
    std::vector<std::function<void()>> jobs;
    for (std::size_t i = 0; i < methods.size(); ++i)
        jobs.push_back([&, i] { results[i] = eigen_verification(methods[i], samples, sigma, seed); });
    run_jobs(jobs, threads);
    for (std::size_t i = 0; i < methods.size(); ++i) {
        CsvBuilder csv({"sample", "lambda_min"});
        for (const EigenRow& r : results[i]) csv.row({fmt(r.sample), fmt(r.lambda_min)});
        write_file((dir / ("eigen_" + std::string(method_name(methods[i])) + ".csv")).string(),
                   csv.text());
    }
    write_file((dir / "plot_eigen.py").string(), kPlotEigen);
}

int cmd_scatter(const Common& common, const std::vector<std::string>& method_names,
                const std::vector<double>& sigmas, int iters, int eigen_samples) {
    const std::vector<Method> methods = parse_methods(method_names);
    const fs::path dir = ensure_outdir(common);

    struct Job {
        Method m;
        double sigma;
        std::vector<ScatterPoint> pts;
    };
    std::vector<Job> runs;
    for (Method m : methods)
        for (double s : sigmas) runs.push_back({m, s, {}});
    std::vector<std::function<void()>> jobs;
    for (Job& r : runs)
        jobs.push_back([&common, iters, &r] {
            r.pts = gradient_scatter(r.m, r.sigma, iters, common.seed);
        });
    run_jobs(jobs, common.threads);

    for (const Job& r : runs) {
        CsvBuilder csv({"x", "y", "degenerate"});
        for (const ScatterPoint& p : r.pts)
            csv.row({fmt(p.x), fmt(p.y), p.degenerate ? "1" : "0"});
        const std::string name =
            "scatter_" + std::string(method_name(r.m)) + "_" + fmt_g(r.sigma) + ".csv";
        write_file((dir / name).string(), csv.text());
        std::cout << name << ": sign_disagreement=" << fmt(sign_disagreement_rate(r.pts))
                  << " outlier_ratio=" << fmt(outlier_ratio(r.pts))
                  << " collinearity_residual=" << fmt(collinearity_residual(r.pts)) << "\n";
    }
    write_file((dir / "plot_scatter.py").string(), kPlotScatter);

    emit_eigen_csvs(dir, methods, eigen_samples, sigmas.empty() ? 0.5 : sigmas.front(),
                    common.seed, common.threads);

    std::vector<std::string> sig;
    for (double s : sigmas) sig.push_back(fmt_g(s));
    write_run_config(dir, "scatter",
                     {{"seed", std::to_string(common.seed)},
                      {"out", common.out},
                      {"threads", std::to_string(common.threads)},
                      {"methods", join_names(method_names)},
                      {"sigma", join_names(sig)},
                      {"iters", std::to_string(iters)},
                      {"eigen_samples", std::to_string(eigen_samples)}});
    return 0;
}

int cmd_eigen(const Common& common, const std::vector<std::string>& method_names, int samples,
              double sigma) {
    const std::vector<Method> methods = parse_methods(method_names);
    const fs::path dir = ensure_outdir(common);
    emit_eigen_csvs(dir, methods, samples, sigma, common.seed, common.threads);
    write_run_config(dir, "eigen",
                     {{"seed", std::to_string(common.seed)},
                      {"out", common.out},
                      {"threads", std::to_string(common.threads)},
                      {"methods", join_names(method_names)},
                      {"samples", std::to_string(samples)},
                      {"sigma", fmt_g(sigma)}});
    return 0;
}

int cmd_explode(const Common& common, const std::vector<std::string>& method_names,
                const std::vector<double>& gaps) {
    const std::vector<Method> methods = parse_methods(method_names);
    const fs::path dir = ensure_outdir(common);
    CsvBuilder csv({"gap", "method", "grad_norm"});
    for (Method m : methods) {
        const std::vector<ExplosionRow> rows = explosion_probe(m, gaps);
        for (const ExplosionRow& r : rows) {
            csv.row({fmt_g(r.gap), method_name(m), fmt(r.grad_norm)});
            if (r.flagged)
                std::cout << "note: " << method_name(m) << " gap " << fmt_g(r.gap)
                          << " is inside the near-degenerate fallback regime\n";
        }
    }
    write_file((dir / "explosion.csv").string(), csv.text());
    write_file((dir / "plot_explosion.py").string(), kPlotExplosion);
    std::vector<std::string> gs;
    for (double g : gaps) gs.push_back(fmt_g(g));
    write_run_config(dir, "explode",
                     {{"seed", std::to_string(common.seed)},
                      {"out", common.out},
                      {"threads", std::to_string(common.threads)},
                      {"methods", join_names(method_names)},
                      {"gaps", join_names(gs)}});
    return 0;
}

struct TrainFlags {
    int steps = 2000;
    int batch = 32;
    double lr = 1e-3;
    std::string optim = "adam";
    int eval_every = 200;
    int eval_samples = 256;
    std::vector<int> hidden = {128, 128};
    std::vector<std::uint64_t> seeds;  // empty: use common.seed
};

void add_train_flags(CLI::App* sub, TrainFlags& t) {
    sub->add_option("--steps,--epochs", t.steps, "optimizer steps")->capture_default_str();
    sub->add_option("--batch", t.batch, "batch size")->capture_default_str();
    sub->add_option("--lr", t.lr, "learning rate")->capture_default_str();
    sub->add_option("--optim", t.optim, "optimizer: adam or sgd")
        ->capture_default_str()
        ->check(CLI::IsMember({"adam", "sgd"}));
    sub->add_option("--eval-every", t.eval_every, "steps between held-out evals")
        ->capture_default_str();
    sub->add_option("--eval-samples", t.eval_samples, "held-out set size")->capture_default_str();
    sub->add_option("--hidden", t.hidden, "hidden layer widths")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--seeds", t.seeds, "seed list; defaults to --seed")->delimiter(',');
}

TrainConfig to_config(const TrainFlags& t, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.steps = t.steps;
    cfg.batch = t.batch;
    cfg.lr = t.lr;
    cfg.optim = t.optim == "sgd" ? OptimKind::sgd : OptimKind::adam;
    cfg.seed = seed;
    cfg.eval_every = t.eval_every;
    cfg.eval_samples = t.eval_samples;
    cfg.hidden = t.hidden;
    return cfg;
}

std::vector<std::uint64_t> resolve_seeds(const TrainFlags& t, const Common& c) {
    return t.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : t.seeds;
}

void write_summary(const fs::path& dir, const std::string& task,
                   const std::vector<std::array<std::string, 3>>& keys,
                   const std::vector<RunRecord>& recs) {
    CsvBuilder csv({"head", "variant", "seed", "metric", "mean", "max", "stddev", "diverged_at"});
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const RunRecord& r = recs[i];
        csv.row({keys[i][0], keys[i][1], keys[i][2], r.metric_name, fmt(r.final_eval.mean),
                 fmt(r.final_eval.max), fmt(r.final_eval.stddev), fmt(r.diverged_at)});
    }
    write_file((dir / ("summary_" + task + ".csv")).string(), csv.text());
}

int cmd_rot_recover(const Common& common, const std::vector<std::string>& head_names,
                    const TrainFlags& tf) {
    const std::vector<Head> heads = parse_heads(head_names);
    const std::vector<std::uint64_t> seeds = resolve_seeds(tf, common);
    const fs::path dir = ensure_outdir(common);

    struct Job {
        Head h;
        std::uint64_t seed;
        RunRecord rec;
    };
    std::vector<Job> runs;
    for (Head h : heads)
        for (std::uint64_t s : seeds) runs.push_back({h, s, {}});
    std::vector<std::function<void()>> jobs;
    for (Job& r : runs)
        jobs.push_back([&tf, &r] {
            r.rec = train_rotation_recovery(r.h, LossConfig{}, to_config(tf, r.seed));
        });
    run_jobs(jobs, common.threads);

    std::vector<std::array<std::string, 3>> keys;
    std::vector<RunRecord> recs;
    for (const Job& r : runs) {
        const std::string name = "run_rot_recover_" + std::string(head_name(r.h)) + "_seed" +
                                 std::to_string(r.seed) + ".csv";
        write_file((dir / name).string(), run_csv(r.rec));
        keys.push_back({head_name(r.h), "theta", std::to_string(r.seed)});
        recs.push_back(r.rec);
        std::cout << name << ": final_mean_deg=" << fmt(r.rec.final_eval.mean)
                  << (r.rec.diverged ? " DIVERGED at step " + std::to_string(r.rec.diverged_at)
                                     : std::string())
                  << "\n";
    }
    write_summary(dir, "rot_recover", keys, recs);
    write_file((dir / "plot_training.py").string(), kPlotTraining);

    std::vector<std::string> ss;
    for (auto s : seeds) ss.push_back(std::to_string(s));
    write_run_config(dir, "rot-recover",
                     {{"seed", std::to_string(common.seed)},
                      {"out", common.out},
                      {"threads", std::to_string(common.threads)},
                      {"heads", join_names(head_names)},
                      {"seeds", join_names(ss)},
                      {"steps", std::to_string(tf.steps)},
                      {"batch", std::to_string(tf.batch)},
                      {"lr", fmt_g(tf.lr)},
                      {"optim", tf.optim},
                      {"eval_every", std::to_string(tf.eval_every)},
                      {"eval_samples", std::to_string(tf.eval_samples)}});
    return 0;
}

int cmd_point_cloud(const Common& common, const std::vector<std::string>& head_names,
                    const TrainFlags& tf, int points, const std::string& loss_mode) {
    const std::vector<Head> heads = parse_heads(head_names);
    const std::vector<std::uint64_t> seeds = resolve_seeds(tf, common);
    const fs::path dir = ensure_outdir(common);

    LossConfig loss;
    loss.use_theta = loss_mode != "y";
    loss.use_y = loss_mode != "theta";

    struct Job {
        Head h;
        std::uint64_t seed;
        RunRecord rec;
    };
    std::vector<Job> runs;
    for (Head h : heads)
        for (std::uint64_t s : seeds) runs.push_back({h, s, {}});
    std::vector<std::function<void()>> jobs;
    for (Job& r : runs)
        jobs.push_back([&tf, &r, &loss, points] {
            r.rec = train_point_cloud(r.h, loss, to_config(tf, r.seed), points);
        });
    run_jobs(jobs, common.threads);

    std::vector<std::array<std::string, 3>> keys;
    std::vector<RunRecord> recs;
    for (const Job& r : runs) {
        const std::string name = "run_point_cloud_" + std::string(head_name(r.h)) + "_" +
                                 loss_mode + "_seed" + std::to_string(r.seed) + ".csv";
        write_file((dir / name).string(), run_csv(r.rec));
        keys.push_back({head_name(r.h), loss_mode, std::to_string(r.seed)});
        recs.push_back(r.rec);
        std::cout << name << ": final_mean_deg=" << fmt(r.rec.final_eval.mean)
                  << (r.rec.diverged ? " DIVERGED at step " + std::to_string(r.rec.diverged_at)
                                     : std::string())
                  << "\n";
    }
    write_summary(dir, "point_cloud", keys, recs);
    write_file((dir / "plot_training.py").string(), kPlotTraining);

    std::vector<std::string> ss;
    for (auto s : seeds) ss.push_back(std::to_string(s));
    write_run_config(dir, "point-cloud",
                     {{"seed", std::to_string(common.seed)},
                      {"out", common.out},
                      {"threads", std::to_string(common.threads)},
                      {"heads", join_names(head_names)},
                      {"seeds", join_names(ss)},
                      {"points", std::to_string(points)},
                      {"loss", loss_mode},
                      {"steps", std::to_string(tf.steps)},
                      {"batch", std::to_string(tf.batch)},
                      {"lr", fmt_g(tf.lr)},
                      {"optim", tf.optim},
                      {"eval_every", std::to_string(tf.eval_every)},
                      {"eval_samples", std::to_string(tf.eval_samples)}});
    return 0;
}

int cmd_chain(const Common& common, const std::string& head_name_str,
              const std::string& ortho_theta, const std::string& ortho_y,
              const std::string& chain_path, const TrainFlags& tf) {
    const Head head = head_from_name(head_name_str);
    const std::vector<std::uint64_t> seeds = resolve_seeds(tf, common);
    const fs::path dir = ensure_outdir(common);
    const KinematicChain chain =
        chain_path.empty() ? default_chain() : load_chain_config(chain_path);

    LossConfig loss;
    loss.ortho_theta = ortho_from_name(ortho_theta);
    loss.ortho_y = ortho_from_name(ortho_y);
    loss.use_theta = true;
    loss.use_y = true;
    const std::string variant = ortho_name(loss.ortho_theta) + std::string("-") +
                                ortho_name(loss.ortho_y);

    struct Job {
        std::uint64_t seed;
        RunRecord rec;
    };
    std::vector<Job> runs;
    for (std::uint64_t s : seeds) runs.push_back({s, {}});
    std::vector<std::function<void()>> jobs;
    for (Job& r : runs)
        jobs.push_back([&tf, &r, &loss, &chain, head] {
            r.rec = train_chain(chain, head, loss, to_config(tf, r.seed));
        });
    run_jobs(jobs, common.threads);

    std::vector<std::array<std::string, 3>> keys;
    std::vector<RunRecord> recs;
    for (const Job& r : runs) {
        const std::string name = "run_chain_" + std::string(head_name(head)) + "_" + variant +
                                 "_seed" + std::to_string(r.seed) + ".csv";
        write_file((dir / name).string(), run_csv(r.rec));
        keys.push_back({head_name(head), variant, std::to_string(r.seed)});
        recs.push_back(r.rec);
        std::cout << name << ": final_position_mse=" << fmt(r.rec.final_eval.mean)
                  << " final_mean_deg=" << fmt(r.rec.final_geodesic_deg)
                  << (r.rec.diverged ? " DIVERGED at step " + std::to_string(r.rec.diverged_at)
                                     : std::string())
                  << "\n";
    }
    write_summary(dir, "chain", keys, recs);
    write_file((dir / "plot_training.py").string(), kPlotTraining);

    std::vector<std::string> ss;
    for (auto s : seeds) ss.push_back(std::to_string(s));
    write_run_config(dir, "chain",
                     {{"seed", std::to_string(common.seed)},
                      {"out", common.out},
                      {"threads", std::to_string(common.threads)},
                      {"head", head_name_str},
                      {"ortho_theta", ortho_theta},
                      {"ortho_y", ortho_y},
                      {"chain_config", chain_path.empty() ? "(default)" : chain_path},
                      {"seeds", join_names(ss)},
                      {"steps", std::to_string(tf.steps)},
                      {"batch", std::to_string(tf.batch)},
                      {"lr", fmt_g(tf.lr)},
                      {"optim", tf.optim},
                      {"eval_every", std::to_string(tf.eval_every)},
                      {"eval_samples", std::to_string(tf.eval_samples)}});
    return 0;
}

int cmd_lr_sweep(const Common& common, const std::vector<std::string>& method_names,
                 const std::vector<double>& lrs, const TrainFlags& tf) {
    const std::vector<Method> methods = parse_methods(method_names);
    if (lrs.size() < 2) throw CLI::ValidationError("--lrs", "need at least two learning rates");
    const fs::path dir = ensure_outdir(common);

    struct Job {
        Method m;
        double lr;
        SweepRow row;
    };
    std::vector<Job> runs;
    for (Method m : methods)
        for (double lr : lrs) runs.push_back({m, lr, {}});
    std::vector<std::function<void()>> jobs;
    for (Job& r : runs)
        jobs.push_back([&common, &tf, &r] {
            const MethodSpec spec = method_spec(r.m);
            TrainConfig cfg = to_config(tf, common.seed);
            cfg.lr = r.lr;
            const RunRecord rec = train_rotation_recovery(spec.head, spec.loss, cfg);
            r.row = {r.m, r.lr, rec.final_geodesic_deg, rec.diverged_at};
        });
    run_jobs(jobs, common.threads);

    CsvBuilder csv({"method", "lr", "final_error", "diverged_at"});
    for (const Job& r : runs)
        csv.row({method_name(r.row.method), fmt_g(r.row.lr), fmt(r.row.final_error),
                 fmt(r.row.diverged_at)});
    write_file((dir / "lr_sweep.csv").string(), csv.text());
    write_file((dir / "plot_lr_sweep.py").string(), kPlotLrSweep);

    std::vector<std::string> ls;
    for (double l : lrs) ls.push_back(fmt_g(l));
    write_run_config(dir, "lr-sweep",
                     {{"seed", std::to_string(common.seed)},
                      {"out", common.out},
                      {"threads", std::to_string(common.threads)},
                      {"methods", join_names(method_names)},
                      {"lrs", join_names(ls)},
                      {"steps", std::to_string(tf.steps)},
                      {"batch", std::to_string(tf.batch)},
                      {"optim", tf.optim}});
    return 0;
}

int cmd_check(int samples, std::uint64_t seed) {
    const std::vector<CheckResult> results = run_checks(samples, seed);
    bool all_pass = true;
    std::printf("%-26s %-10s %-12s %-12s %s\n", "check", "samples", "worst", "tolerance", "result");
    for (const CheckResult& c : results) {
        std::printf("%-26s %-10d %-12.3e %-12.3e %s\n", c.name.c_str(), c.samples, c.worst,
                    c.tolerance, c.pass ? "pass" : "FAIL");
        all_pass = all_pass && c.pass;
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient studies and training comparisons for rotation heads"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value defaults file (flags win)");

    // scatter
    Common sc_common;
    std::vector<std::string> sc_methods = {"gs", "svd", "prom"};
    std::vector<double> sc_sigmas = {0.5};
    int sc_iters = 10000;
    int sc_eigen_samples = 1000;
    CLI::App* scatter = app.add_subcommand("scatter", "gradient scatter + eigen CSVs");
    add_common(scatter, sc_common);
    scatter->add_option("--methods", sc_methods, "methods")->delimiter(',')->capture_default_str();
    scatter->add_option("--sigma", sc_sigmas, "perturbation sigmas")
        ->delimiter(',')
        ->capture_default_str();
    scatter->add_option("--iters", sc_iters, "samples per scatter")->capture_default_str();
    scatter->add_option("--eigen-samples", sc_eigen_samples, "samples for eigen CSVs")
        ->capture_default_str();

    // eigen
    Common ei_common;
    std::vector<std::string> ei_methods = {"gs", "svd", "prom"};
    int ei_samples = 1000;
    double ei_sigma = 0.5;
    CLI::App* eigen = app.add_subcommand("eigen", "lambda_min of the route Jacobians");
    add_common(eigen, ei_common);
    eigen->add_option("--methods", ei_methods, "methods")->delimiter(',')->capture_default_str();
    eigen->add_option("--samples", ei_samples, "sample count")->capture_default_str();
    eigen->add_option("--sigma", ei_sigma, "perturbation sigma")->capture_default_str();

    // explode
    Common ex_common;
    std::vector<std::string> ex_methods = {"gs", "svd", "prom"};
    std::vector<double> ex_gaps = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    CLI::App* explode = app.add_subcommand("explode", "Jacobian norm vs degeneracy gap");
    add_common(explode, ex_common);
    explode->add_option("--methods", ex_methods, "methods")->delimiter(',')->capture_default_str();
    explode->add_option("--gaps", ex_gaps, "gap grid")->delimiter(',')->capture_default_str();

    // rot-recover
    Common rr_common;
    std::vector<std::string> rr_heads = {"prom", "six_d", "quat", "euler"};
    TrainFlags rr_tf;
    CLI::App* rot = app.add_subcommand("rot-recover", "train rotation recovery per head");
    add_common(rot, rr_common);
    rot->add_option("--heads", rr_heads, "representation heads")
        ->delimiter(',')
        ->capture_default_str();
    add_train_flags(rot, rr_tf);

    // point-cloud
    Common pc_common;
    std::vector<std::string> pc_heads = {"prom", "six_d"};
    TrainFlags pc_tf;
    int pc_points = 16;
    std::string pc_loss = "both";
    CLI::App* pc = app.add_subcommand("point-cloud", "train point-cloud pose per head");
    add_common(pc, pc_common);
    pc->add_option("--heads", pc_heads, "representation heads")
        ->delimiter(',')
        ->capture_default_str();
    pc->add_option("--points", pc_points, "reference cloud size")->capture_default_str();
    pc->add_option("--loss", pc_loss, "loss terms: theta, y, or both")
        ->capture_default_str()
        ->check(CLI::IsMember({"theta", "y", "both"}));
    add_train_flags(pc, pc_tf);

    // chain
    Common ch_common;
    std::string ch_head = "prom";
    std::string ch_ortho_theta = "id";
    std::string ch_ortho_y = "id";
    std::string ch_config_path;
    TrainFlags ch_tf;
    CLI::App* chain = app.add_subcommand("chain", "train chain pose with ortho rules in the loss");
    add_common(chain, ch_common);
    chain->add_option("--head", ch_head, "representation head per joint")->capture_default_str();
    chain->add_option("--ortho-theta", ch_ortho_theta, "rule inside the matrix loss")
        ->capture_default_str()
        ->check(CLI::IsMember({"id", "gs", "svd"}));
    chain->add_option("--ortho-y", ch_ortho_y, "rule inside the downstream loss")
        ->capture_default_str()
        ->check(CLI::IsMember({"id", "gs", "svd"}));
    chain->add_option("--chain-config", ch_config_path, "chain geometry file");
    add_train_flags(chain, ch_tf);

    // lr-sweep
    Common lr_common;
    std::vector<std::string> lr_methods = {"gs", "svd", "prom"};
    std::vector<double> lr_lrs = {1e-4, 2e-4, 5e-4, 8e-4};
    TrainFlags lr_tf;
    CLI::App* sweep = app.add_subcommand("lr-sweep", "stability sweep over learning rates");
    add_common(sweep, lr_common);
    sweep->add_option("--methods", lr_methods, "methods")->delimiter(',')->capture_default_str();
    sweep->add_option("--lrs", lr_lrs, "learning rates")->delimiter(',')->capture_default_str();
    add_train_flags(sweep, lr_tf);

    // check
    Common ck_common;
    int ck_samples = 1000;
    CLI::App* check = app.add_subcommand("check", "finite-difference self-validation suite");
    add_common(check, ck_common);
    check->add_option("--samples", ck_samples, "samples per check")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (scatter->parsed())
            return cmd_scatter(sc_common, sc_methods, sc_sigmas, sc_iters, sc_eigen_samples);
        if (eigen->parsed()) return cmd_eigen(ei_common, ei_methods, ei_samples, ei_sigma);
        if (explode->parsed()) return cmd_explode(ex_common, ex_methods, ex_gaps);
        if (rot->parsed()) return cmd_rot_recover(rr_common, rr_heads, rr_tf);
        if (pc->parsed()) return cmd_point_cloud(pc_common, pc_heads, pc_tf, pc_points, pc_loss);
        if (chain->parsed())
            return cmd_chain(ch_common, ch_head, ch_ortho_theta, ch_ortho_y, ch_config_path, ch_tf);
        if (sweep->parsed()) return cmd_lr_sweep(lr_common, lr_methods, lr_lrs, lr_tf);
        if (check->parsed()) return cmd_check(ck_samples, ck_common.seed);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
