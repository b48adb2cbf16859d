#pragma once

#include <iosfwd>
#include <vector>

namespace weigh {

struct Dot {
    double x = 0.0;
    double y = 0.0;
};

// Point annotations on a width x height image. Every dot lies in [0, width) x [0, height).
struct DotMap {
    int width = 0;
    int height = 0;
    std::vector<Dot> dots;

    void validate() const;
};

// Row-major per-pixel density (people per pixel).
struct DensityMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    double total() const;
};

// Row-major grid of per-patch sums.
struct CountGrid {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    double total() const;
};

struct QuantizerConfig {
    double width = 0.1;       // interval width in log space
    double log_floor = -2.0;  // (0, e^log_floor) is its own interval
    double beta = 0.3;        // adaptive kernel: sigma = beta * mean 3-NN distance
    int patch = 32;

    void validate() const;
};

// Kernel spread for each dot: beta times the mean distance to its (up to) 3 nearest
// neighbours. A lone dot uses beta * min(width, height) / 4.
std::vector<double> adaptive_sigmas(const DotMap& dm, const QuantizerConfig& cfg);

// Sum of per-dot Gaussian kernels, each truncated at 4 sigma, clipped to the image
// and renormalized so every dot contributes exactly one unit of mass.
DensityMap density_map(const DotMap& dm, const QuantizerConfig& cfg);

// Patch-level sums. Sides that are not a multiple of cfg.patch are zero-padded.
CountGrid patch_counts(const DensityMap& d, const QuantizerConfig& cfg);

// Log-space count interval index.
int quantize(double count, const QuantizerConfig& cfg);

// Representative count of an interval.
double inverse_quantize(int interval, const QuantizerConfig& cfg);

// "width height" then one "x y" per line.
DotMap read_dot_map(std::istream& in);
void write_dot_map(std::ostream& out, const DotMap& dm);
void write_csv(std::ostream& out, const DensityMap& d);
void write_csv(std::ostream& out, const CountGrid& g);

}  // namespace weigh
