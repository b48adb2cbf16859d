#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "weighcount/quantizer.hpp"
#include "weighcount/trainer.hpp"

namespace weigh {

class LengthMismatch : public WeighError {
public:
    LengthMismatch() : WeighError("prediction and ground-truth lengths differ") {}
};

class EmptyInput : public WeighError {
public:
    EmptyInput() : WeighError("no values to evaluate") {}
};

class ShapeMismatch : public WeighError {
public:
    ShapeMismatch() : WeighError("prediction and ground-truth grids differ in shape") {}
};

struct ErrorStats {
    double mae = 0.0;
    double mse = 0.0;  // root of the mean squared error
};

ErrorStats mae_mse(std::span<const double> pred, std::span<const double> gt);

// Grid Average Mean absolute Error: the grid is split into 2^level x 2^level regions
// (floor-divided boundaries) and per-region absolute count errors are summed.
double game(const CountGrid& pred, const CountGrid& gt, int level);

// Builds the Q-function used for one patch (lets oracles that know the target stand in
// for a trained network).
using PatchQ = std::function<QFunction(const Patch&)>;

struct PatchEstimate {
    std::size_t patch = 0;
    int gt_interval = 0;
    double raw_value = 0.0;  // accumulated value before clamping
    int interval = 0;
    double count = 0.0;
    Rollout rollout;
};

struct Inference {
    std::vector<PatchEstimate> patches;
    double total_count = 0.0;
};

// Greedy rollout per patch, clamp to [0, max_interval], inverse-quantize, and sum.
// Continuous pools estimate counts directly (clamped at 0).
Inference infer(const PatchQ& q, const Dataset& data, std::span<const std::size_t> indices,
                const EpisodeConfig& episode, const QuantizerConfig& quant);
Inference infer(const QNetParams& params, const Dataset& data, std::span<const std::size_t> indices,
                const EpisodeConfig& episode, const QuantizerConfig& quant);

struct TraceStep {
    int t = 0;
    std::string action;
    std::vector<double> q;
    double value = 0.0;

    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct TraceRecord {
    std::size_t patch = 0;
    int gt_interval = 0;
    std::vector<TraceStep> steps;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

TraceRecord to_trace(const PatchEstimate& est, const ActionPool& pool);

// Holdout patches are tiled row-major onto images of side x side patches (the last image
// zero-padded) to get image-level counts and GAME.
struct EvalReport {
    double interval_mae = 0.0;
    ErrorStats patch_counts;
    ErrorStats image_counts;
    std::array<double, 4> game{};  // mean over images, levels 0..3
    std::size_t images = 0;
};

EvalReport evaluate(const Inference& inf, const Dataset& data, int image_side);

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> history);
// patch,gt_interval,interval,raw_value,count,gt_count
void write_estimates_csv(std::ostream& out, const Inference& inf, const Dataset& data);

struct AblationRow {
    std::string name;
    double interval_mae = 0.0;
    double count_mae = 0.0;
};

// Trains one network per reward mode (and optionally the imitation baseline) on the
// same data and reports held-out errors. Full design comes first.
std::vector<AblationRow> run_ablation(const Dataset& data, const TrainConfig& cfg, const QuantizerConfig& quant,
                                      bool with_imitation);
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

// CSV with header "patch,gt,t,action,q0..q{n-1},value"; one line per step.
void export_trace(std::ostream& out, std::span<const TraceRecord> records, std::size_t num_actions);
std::vector<TraceRecord> parse_trace(std::istream& in);

}  // namespace weigh
