#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "weighcount/checkpoint.hpp"
#include "weighcount/config.hpp"
#include "weighcount/eval.hpp"

namespace fs = std::filesystem;
using namespace weigh;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

RunConfig resolve(const Globals& g) {
    RunConfig cfg = g.config.empty() ? RunConfig{} : load_config(g.config);
    if (g.seed) {
        cfg.seed = *g.seed;
    }
    if (g.out_dir) {
        cfg.out_dir = *g.out_dir;
    }
    cfg.propagate_seed();
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    save_config((fs::path(cfg.out_dir) / "config.ini").string(), cfg);
    return cfg;
}

std::string out_path(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw WeighError("cannot write " + path);
    }
    return out;
}

std::string sequence_text(const OracleResult& r) {
    std::string s;
    for (const Action& a : r.sequence) {
        s += (s.empty() ? "" : " ") + a.label();
    }
    return s.empty() ? "(none)" : s;
}

void print_eval(const EvalReport& rep) {
    fmt::print("holdout patches interval MAE {:.6f}\n", rep.interval_mae);
    fmt::print("patch counts    MAE {:.6f}  MSE {:.6f}\n", rep.patch_counts.mae, rep.patch_counts.mse);
    fmt::print("image counts    MAE {:.6f}  MSE {:.6f}  ({} images)\n", rep.image_counts.mae, rep.image_counts.mse,
               rep.images);
    for (std::size_t l = 0; l < rep.game.size(); ++l) {
        fmt::print("GAME({}) {:.6f}\n", l, rep.game[l]);
    }
}

int cmd_synth(const RunConfig& cfg) {
    const Dataset ds = make_dataset(cfg.synth);
    auto out = open_out(out_path(cfg, "dataset.jsonl"));
    write_dataset(out, ds);
    fmt::print("{} patches ({} train, {} holdout) -> {}\n", ds.patches.size(), ds.train.size(), ds.holdout.size(),
               out_path(cfg, "dataset.jsonl"));
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& resume, int checkpoint_every) {
    const Dataset ds = make_dataset(cfg.synth);
    const std::string text = config_text(cfg);
    std::optional<Trainer> trainer;
    if (resume.empty()) {
        trainer.emplace(ds, cfg.train);
    } else {
        Checkpoint ck = load_checkpoint(resume);
        if (ck.config != text) {
            std::cerr << "warning: checkpoint was written with a different config\n";
        }
        bind_features(ck.state, ds);
        trainer.emplace(ds, cfg.train, ck.state);
    }
    while (trainer->epoch() < cfg.train.epochs) {
        const EpochMetrics m = trainer->run_epoch();
        fmt::print("epoch {:4d}  eps {:.2f}  loss {:.6f}  updates {:4d}  holdout MAE {:.6f}\n", m.epoch, m.epsilon,
                   m.mean_loss, m.updates, m.holdout_mae);
        if (checkpoint_every > 0 && trainer->epoch() % checkpoint_every == 0) {
            save_checkpoint({text, trainer->snapshot()}, out_path(cfg, fmt::format("checkpoint_{:04d}.json", trainer->epoch())));
        }
    }
    save_checkpoint({text, trainer->snapshot()}, out_path(cfg, "checkpoint.json"));
    auto metrics = open_out(out_path(cfg, "metrics.csv"));
    write_metrics_csv(metrics, trainer->history());
    return 0;
}

QNetParams load_params(const std::string& path) {
    return load_checkpoint(path).state.params;
}

int cmd_eval(const RunConfig& cfg, std::string checkpoint) {
    if (checkpoint.empty()) {
        checkpoint = out_path(cfg, "checkpoint.json");
    }
    const Dataset ds = make_dataset(cfg.synth);
    const Inference inf = infer(load_params(checkpoint), ds, ds.holdout, cfg.train.setup.episode, cfg.quantizer);
    const EvalReport rep = evaluate(inf, ds, cfg.image_side);
    print_eval(rep);
    auto out = open_out(out_path(cfg, "estimates.csv"));
    write_estimates_csv(out, inf, ds);
    auto summary = open_out(out_path(cfg, "eval.csv"));
    summary << "metric,value\n";
    fmt::print(summary, "interval_mae,{:.6f}\npatch_mae,{:.6f}\npatch_mse,{:.6f}\nimage_mae,{:.6f}\nimage_mse,{:.6f}\n",
               rep.interval_mae, rep.patch_counts.mae, rep.patch_counts.mse, rep.image_counts.mae,
               rep.image_counts.mse);
    for (std::size_t l = 0; l < rep.game.size(); ++l) {
        fmt::print(summary, "game{},{:.6f}\n", l, rep.game[l]);
    }
    return 0;
}

int cmd_trace(const RunConfig& cfg, std::string checkpoint, bool oracle, std::size_t limit) {
    const Dataset ds = make_dataset(cfg.synth);
    const EpisodeConfig& ep = cfg.train.setup.episode;
    std::vector<std::size_t> idx(ds.holdout.begin(), ds.holdout.begin() + std::min(limit, ds.holdout.size()));
    Inference inf;
    if (oracle) {
        const double tol = cfg.train.setup.rewards.end_tolerance;
        inf = infer([&](const Patch& p) { return greedy_oracle_q(target_of(p, ep.pool.mode()), ep.pool, tol); }, ds,
                    idx, ep, cfg.quantizer);
    } else {
        if (checkpoint.empty()) {
            checkpoint = out_path(cfg, "checkpoint.json");
        }
        inf = infer(load_params(checkpoint), ds, idx, ep, cfg.quantizer);
    }
    std::vector<TraceRecord> records;
    for (const PatchEstimate& e : inf.patches) {
        records.push_back(to_trace(e, ep.pool));
    }
    auto out = open_out(out_path(cfg, "trace.csv"));
    export_trace(out, records, ep.pool.size());
    fmt::print("{} traced patches -> {}\n", records.size(), out_path(cfg, "trace.csv"));
    return 0;
}

int cmd_ablate(const RunConfig& cfg, bool imitation) {
    const Dataset ds = make_dataset(cfg.synth);
    const auto rows = run_ablation(ds, cfg.train, cfg.quantizer, imitation);
    fmt::print("{:<16} {:>12} {:>12}\n", "mode", "interval MAE", "count MAE");
    for (const AblationRow& r : rows) {
        fmt::print("{:<16} {:>12.6f} {:>12.6f}\n", r.name, r.interval_mae, r.count_mae);
    }
    auto out = open_out(out_path(cfg, "ablation.csv"));
    write_ablation_csv(out, rows);
    return 0;
}

int cmd_oracle(const RunConfig& cfg, std::optional<int> g) {
    const EpisodeSetup& setup = cfg.train.setup;
    const ActionPool& pool = setup.episode.pool;
    if (pool.mode() != PoolMode::Interval) {
        throw ConfigError("oracle needs the interval action pool");
    }
    const int tm = setup.episode.max_steps;
    const ExactQTable table(pool, tm, setup.episode.gamma, setup.rewards, setup.mode);
    auto bfs = [&](int target) {
        try {
            return bfs_shortest(target, pool, tm);
        } catch (const Unreachable&) {
            return OracleResult{target, {}, 0, 0.0, false};
        }
    };
    if (g) {
        if (*g < 0 || *g > table.max_target()) {
            throw ConfigError(fmt::format("--g must lie in [0, {}]", table.max_target()));
        }
        const OracleResult gr = greedy_sequence(*g, pool, tm);
        const OracleResult b = bfs(*g);
        const OracleResult q = table.rollout(*g);
        fmt::print("greedy  length {}  achieved {}  sequence {}\n", gr.length, gr.achieved, sequence_text(gr));
        if (b.balanced) {
            fmt::print("bfs     length {}  achieved {}  sequence {}\n", b.length, b.achieved, sequence_text(b));
        } else {
            fmt::print("bfs     unreachable within {} steps\n", tm);
        }
        fmt::print("q-table length {}  achieved {}  sequence {}\n", q.length, q.achieved, sequence_text(q));
        return 0;
    }
    std::vector<OracleResult> greedy, shortest, rollouts;
    for (int t = 0; t <= table.max_target(); ++t) {
        greedy.push_back(greedy_sequence(t, pool, tm));
        shortest.push_back(bfs(t));
        rollouts.push_back(table.rollout(t));
    }
    for (auto [name, rows] : {std::pair{"oracle_greedy.csv", &greedy}, std::pair{"oracle_bfs.csv", &shortest},
                              std::pair{"oracle_qtable.csv", &rollouts}}) {
        auto out = open_out(out_path(cfg, name));
        write_oracle_csv(out, *rows);
    }
    std::size_t unbalanced = 0;
    for (const OracleResult& r : greedy) {
        unbalanced += r.balanced ? 0 : 1;
    }
    fmt::print("targets 0..{}: greedy misses {} within {} steps -> {}\n", table.max_target(), unbalanced, tm,
               cfg.out_dir);
    return 0;
}

int cmd_quantize(const RunConfig& cfg, const std::string& dots_path) {
    std::ifstream in(dots_path);
    if (!in) {
        throw WeighError("cannot open dot map " + dots_path);
    }
    const DotMap dm = read_dot_map(in);
    const DensityMap d = density_map(dm, cfg.quantizer);
    const CountGrid counts = patch_counts(d, cfg.quantizer);
    CountGrid intervals = counts;
    for (double& v : intervals.values) {
        v = quantize(v, cfg.quantizer);
    }
    auto dout = open_out(out_path(cfg, "density.csv"));
    write_csv(dout, d);
    auto cout = open_out(out_path(cfg, "patch_counts.csv"));
    write_csv(cout, counts);
    auto iout = open_out(out_path(cfg, "intervals.csv"));
    write_csv(iout, intervals);
    fmt::print("{} dots, density total {:.6f}, {}x{} patches\n", dm.dots.size(), d.total(), counts.rows, counts.cols);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counting as weighing: synthetic-feature DQN experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override run.seed");
    app.add_option("--out-dir", g.out_dir, "Override run.out_dir");

    auto* synth = app.add_subcommand("synth", "Write the synthetic dataset");
    auto* train = app.add_subcommand("train", "Train the Q-network");
    std::string resume;
    int checkpoint_every = 0;
    train->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
    train->add_option("--checkpoint-every", checkpoint_every, "Also save a checkpoint every N epochs")
        ->check(CLI::NonNegativeNumber);

    auto* eval = app.add_subcommand("eval", "MAE/MSE/GAME on the held-out split");
    std::string checkpoint;
    eval->add_option("--checkpoint", checkpoint, "Defaults to <out-dir>/checkpoint.json");

    auto* trace = app.add_subcommand("trace", "Export per-step Q-values of greedy rollouts");
    trace->add_option("--checkpoint", checkpoint, "Defaults to <out-dir>/checkpoint.json");
    bool trace_oracle = false;
    std::size_t limit = 20;
    trace->add_flag("--oracle", trace_oracle, "Trace the greedy oracle instead of a network");
    trace->add_option("--limit", limit, "Held-out patches to trace");

    auto* ablate = app.add_subcommand("ablate", "Train every reward mode and compare");
    bool imitation = false;
    ablate->add_flag("--imitation", imitation, "Add the imitation-learning baseline");

    auto* oracle = app.add_subcommand("oracle", "Greedy, BFS and exact Q-table sequences");
    std::optional<int> target;
    oracle->add_option("--g", target, "Single target interval");

    auto* quant = app.add_subcommand("quantize", "Density map, patch counts and intervals of a dot map");
    std::string dots;
    quant->add_option("--dots", dots, "Dot map file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        const RunConfig cfg = resolve(g);
        if (synth->parsed()) return cmd_synth(cfg);
        if (train->parsed()) return cmd_train(cfg, resume, checkpoint_every);
        if (eval->parsed()) return cmd_eval(cfg, checkpoint);
        if (trace->parsed()) return cmd_trace(cfg, checkpoint, trace_oracle, limit);
        if (ablate->parsed()) return cmd_ablate(cfg, imitation);
        if (oracle->parsed()) return cmd_oracle(cfg, target);
        if (quant->parsed()) return cmd_quantize(cfg, dots);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
