#include "weighcount/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace weigh {

ErrorStats mae_mse(std::span<const double> pred, std::span<const double> gt) {
    if (pred.size() != gt.size()) {
        throw LengthMismatch();
    }
    if (pred.empty()) {
        throw EmptyInput();
    }
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gt[i];
        abs_sum += std::abs(d);
        sq_sum += d * d;
    }
    const double n = static_cast<double>(pred.size());
    return {abs_sum / n, std::sqrt(sq_sum / n)};
}

double game(const CountGrid& pred, const CountGrid& gt, int level) {
    if (pred.rows != gt.rows || pred.cols != gt.cols) {
        throw ShapeMismatch();
    }
    if (level < 0 || level > 30) {
        throw std::invalid_argument("GAME level must lie in [0, 30]");
    }
    const long splits = 1L << level;
    double err = 0.0;
    for (long i = 0; i < splits; ++i) {
        const long r0 = i * pred.rows / splits;
        const long r1 = (i + 1) * pred.rows / splits;
        for (long j = 0; j < splits; ++j) {
            const long c0 = j * pred.cols / splits;
            const long c1 = (j + 1) * pred.cols / splits;
            double diff = 0.0;
            for (long r = r0; r < r1; ++r) {
                for (long c = c0; c < c1; ++c) {
                    diff += pred.at(static_cast<int>(r), static_cast<int>(c)) -
                            gt.at(static_cast<int>(r), static_cast<int>(c));
                }
            }
            err += std::abs(diff);
        }
    }
    return err;
}

Inference infer(const PatchQ& q, const Dataset& data, std::span<const std::size_t> indices,
                const EpisodeConfig& episode, const QuantizerConfig& quant) {
    Inference out;
    const bool interval_mode = episode.pool.mode() == PoolMode::Interval;
    for (std::size_t idx : indices) {
        const Patch& p = data.patches.at(idx);
        PatchEstimate est;
        est.patch = p.id;
        est.gt_interval = p.interval;
        est.rollout = greedy_rollout(p.feature, q(p), episode);
        est.raw_value = est.rollout.value;
        if (interval_mode) {
            est.interval = clamp_interval(est.raw_value, data.max_interval);
            est.count = inverse_quantize(est.interval, quant);
        } else {
            est.count = std::max(est.raw_value, 0.0);
            est.interval = std::min(quantize(est.count, quant), data.max_interval);
        }
        out.total_count += est.count;
        out.patches.push_back(std::move(est));
    }
    return out;
}

Inference infer(const QNetParams& params, const Dataset& data, std::span<const std::size_t> indices,
                const EpisodeConfig& episode, const QuantizerConfig& quant) {
    const QFunction q = [&params](const EpisodeState& s) { return forward(params, s); };
    return infer([&q](const Patch&) { return q; }, data, indices, episode, quant);
}

EvalReport evaluate(const Inference& inf, const Dataset& data, int image_side) {
    if (inf.patches.empty()) {
        throw EmptyInput();
    }
    if (image_side < 1) {
        throw ConfigError("image_side must be >= 1");
    }
    EvalReport rep;
    std::vector<double> pred;
    std::vector<double> gt;
    double interval_err = 0.0;
    for (const PatchEstimate& e : inf.patches) {
        pred.push_back(e.count);
        gt.push_back(data.patches.at(e.patch).count);
        interval_err += std::abs(e.interval - e.gt_interval);
    }
    rep.interval_mae = interval_err / static_cast<double>(inf.patches.size());
    rep.patch_counts = mae_mse(pred, gt);

    const auto per_image = static_cast<std::size_t>(image_side * image_side);
    std::vector<double> img_pred;
    std::vector<double> img_gt;
    for (std::size_t start = 0; start < pred.size(); start += per_image) {
        CountGrid p{image_side, image_side, std::vector<double>(per_image, 0.0)};
        CountGrid g = p;
        for (std::size_t k = 0; k < per_image && start + k < pred.size(); ++k) {
            p.values[k] = pred[start + k];
            g.values[k] = gt[start + k];
        }
        img_pred.push_back(p.total());
        img_gt.push_back(g.total());
        for (int level = 0; level < 4; ++level) {
            rep.game[static_cast<std::size_t>(level)] += game(p, g, level);
        }
    }
    rep.images = img_pred.size();
    for (double& v : rep.game) {
        v /= static_cast<double>(rep.images);
    }
    rep.image_counts = mae_mse(img_pred, img_gt);
    return rep;
}

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> history) {
    out << "epoch,epsilon,mean_loss,updates,holdout_mae\n";
    for (const EpochMetrics& m : history) {
        fmt::print(out, "{},{:.6f},{:.6f},{},{:.6f}\n", m.epoch, m.epsilon, m.mean_loss, m.updates, m.holdout_mae);
    }
}

void write_estimates_csv(std::ostream& out, const Inference& inf, const Dataset& data) {
    out << "patch,gt_interval,interval,raw_value,count,gt_count\n";
    for (const PatchEstimate& e : inf.patches) {
        fmt::print(out, "{},{},{},{:.6f},{:.6f},{:.6f}\n", e.patch, e.gt_interval, e.interval, e.raw_value, e.count,
                   data.patches.at(e.patch).count);
    }
}

std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& cfg, const QuantizerConfig& quant,
                                      bool with_imitation) {
    std::vector<AblationRow> rows;
    auto score = [&](std::string name, const QNetParams& params) {
        const EvalReport rep = evaluate(infer(params, data, data.holdout, cfg.setup.episode, quant), data, 1);
        rows.push_back(AblationRow{std::move(name), rep.interval_mae, rep.patch_counts.mae});
    };
    for (RewardMode mode : {RewardMode::Full, RewardMode::NoGuiding, RewardMode::NoForceEnding, RewardMode::NoSqueezing}) {
        TrainConfig c = cfg;
        c.setup.mode = mode;
        score(to_string(mode), train(data, c).params);
    }
    if (with_imitation) {
        score("imitation", imitation_train(data, cfg).params);
    }
    return rows;
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
    out << "mode,interval_mae,count_mae\n";
    for (const AblationRow& r : rows) {
        fmt::print(out, "{},{:.6f},{:.6f}\n", r.name, r.interval_mae, r.count_mae);
    }
}

TraceRecord to_trace(const PatchEstimate& est, const ActionPool& pool) {
    TraceRecord rec;
    rec.patch = est.patch;
    rec.gt_interval = est.gt_interval;
    for (const RolloutStep& s : est.rollout.steps) {
        rec.steps.push_back(TraceStep{s.t, pool[s.action].label(), s.q, s.value});
    }
    return rec;
}

void export_trace(std::ostream& out, std::span<const TraceRecord> records, std::size_t num_actions) {
    out << "patch,gt,t,action";
    for (std::size_t i = 0; i < num_actions; ++i) {
        out << ",q" << i;
    }
    out << ",value\n";
    for (const TraceRecord& rec : records) {
        for (const TraceStep& s : rec.steps) {
            if (s.q.size() != num_actions) {
                throw DimensionMismatch("trace step has the wrong number of Q-values");
            }
            fmt::print(out, "{},{},{},{}", rec.patch, rec.gt_interval, s.t, s.action);
            for (double v : s.q) {
                fmt::print(out, ",{:.6f}", v);
            }
            fmt::print(out, ",{:.6f}\n", s.value);
        }
    }
    if (!out) {
        throw WeighError("failed writing trace");
    }
}

std::vector<TraceRecord> parse_trace(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("patch,gt,t,action", 0) != 0) {
        throw WeighError("trace: missing header");
    }
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 5) {
        throw WeighError("trace: malformed header");
    }
    const std::size_t num_q = columns - 5;
    std::vector<TraceRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (cells.size() != columns) {
            throw WeighError("trace: wrong column count in '" + line + "'");
        }
        try {
            const auto patch = static_cast<std::size_t>(std::stoull(cells[0]));
            const int gt = std::stoi(cells[1]);
            TraceStep step;
            step.t = std::stoi(cells[2]);
            step.action = cells[3];
            for (std::size_t i = 0; i < num_q; ++i) {
                step.q.push_back(std::stod(cells[4 + i]));
            }
            step.value = std::stod(cells.back());
            if (records.empty() || records.back().patch != patch || step.t == 0) {
                records.push_back(TraceRecord{patch, gt, {}});
            }
            records.back().steps.push_back(std::move(step));
        } catch (const std::logic_error&) {
            throw WeighError("trace: malformed line '" + line + "'");
        }
    }
    return records;
}

}  // namespace weigh
