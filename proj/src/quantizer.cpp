#include "weighcount/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "weighcount/core.hpp"

namespace weigh {

void DotMap::validate() const {
    if (width <= 0 || height <= 0) {
        throw ConfigError("dot map dimensions must be positive");
    }
    for (const Dot& d : dots) {
        if (!(d.x >= 0.0 && d.x < width && d.y >= 0.0 && d.y < height)) {
            throw ConfigError(fmt::format("dot ({}, {}) lies outside the {}x{} image", d.x, d.y,
                                          width, height));
        }
    }
}

double DensityMap::total() const { return std::accumulate(values.begin(), values.end(), 0.0); }

double CountGrid::total() const { return std::accumulate(values.begin(), values.end(), 0.0); }

void QuantizerConfig::validate() const {
    if (!(width > 0.0)) {
        throw ConfigError("quantizer width must be > 0");
    }
    if (patch < 1) {
        throw ConfigError("patch size must be >= 1");
    }
    if (!(beta > 0.0)) {
        throw ConfigError("beta must be > 0");
    }
}

std::vector<double> adaptive_sigmas(const DotMap& dm, const QuantizerConfig& cfg) {
    const std::size_t n = dm.dots.size();
    std::vector<double> sigmas(n);
    if (n == 1) {
        sigmas[0] = cfg.beta * std::min(dm.width, dm.height) / 4.0;
        return sigmas;
    }
    std::vector<double> dist;
    for (std::size_t i = 0; i < n; ++i) {
        dist.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                dist.push_back(std::hypot(dm.dots[i].x - dm.dots[j].x, dm.dots[i].y - dm.dots[j].y));
            }
        }
        std::size_t k = std::min<std::size_t>(3, dist.size());
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        sigmas[i] = cfg.beta * std::accumulate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), 0.0) /
                    static_cast<double>(k);
    }
    return sigmas;
}

DensityMap density_map(const DotMap& dm, const QuantizerConfig& cfg) {
    dm.validate();
    DensityMap out{dm.width, dm.height,
                   std::vector<double>(static_cast<std::size_t>(dm.width) * dm.height, 0.0)};
    const auto sigmas = adaptive_sigmas(dm, cfg);
    std::vector<double> kernel;
    for (std::size_t i = 0; i < dm.dots.size(); ++i) {
        const Dot& d = dm.dots[i];
        const double s = sigmas[i];
        const int cx = static_cast<int>(d.x);
        const int cy = static_cast<int>(d.y);
        // Coincident dots have zero spread: all mass goes to the containing pixel.
        if (!(s > 1e-9)) {
            out.values[static_cast<std::size_t>(cy) * dm.width + cx] += 1.0;
            continue;
        }
        const double reach = 4.0 * s;
        const int x0 = std::max(0, static_cast<int>(std::floor(d.x - reach)));
        const int x1 = std::min(dm.width - 1, static_cast<int>(std::ceil(d.x + reach)));
        const int y0 = std::max(0, static_cast<int>(std::floor(d.y - reach)));
        const int y1 = std::min(dm.height - 1, static_cast<int>(std::ceil(d.y + reach)));
        const int kw = x1 - x0 + 1;
        kernel.assign(static_cast<std::size_t>(kw) * (y1 - y0 + 1), 0.0);
        double mass = 0.0;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x + 0.5 - d.x;
                const double dy = y + 0.5 - d.y;
                const double r2 = dx * dx + dy * dy;
                if (r2 > reach * reach) {
                    continue;
                }
                const double v = std::exp(-r2 / (2.0 * s * s));
                kernel[static_cast<std::size_t>(y - y0) * kw + (x - x0)] = v;
                mass += v;
            }
        }
        if (!(mass > 0.0)) {
            out.values[static_cast<std::size_t>(cy) * dm.width + cx] += 1.0;
            continue;
        }
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                out.values[static_cast<std::size_t>(y) * dm.width + x] +=
                    kernel[static_cast<std::size_t>(y - y0) * kw + (x - x0)] / mass;
            }
        }
    }
    return out;
}

CountGrid patch_counts(const DensityMap& d, const QuantizerConfig& cfg) {
    cfg.validate();
    CountGrid g;
    g.rows = (d.height + cfg.patch - 1) / cfg.patch;
    g.cols = (d.width + cfg.patch - 1) / cfg.patch;
    g.values.assign(static_cast<std::size_t>(g.rows) * g.cols, 0.0);
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            g.values[static_cast<std::size_t>(y / cfg.patch) * g.cols + x / cfg.patch] += d.at(x, y);
        }
    }
    return g;
}

int quantize(double count, const QuantizerConfig& cfg) {
    if (count < 0.0 || std::isnan(count)) {
        throw std::invalid_argument("count must be nonnegative");
    }
    if (count == 0.0) {
        return 0;
    }
    const double raw = std::floor((std::log(count) - cfg.log_floor) / cfg.width + 2.0);
    return static_cast<int>(std::max(raw, 1.0));
}

double inverse_quantize(int interval, const QuantizerConfig& cfg) {
    if (interval < 0) {
        throw std::invalid_argument("interval must be nonnegative");
    }
    if (interval == 0) {
        return 0.0;
    }
    const double upper = std::exp(cfg.log_floor + cfg.width * (interval - 1));
    if (interval == 1) {
        return 0.5 * upper;
    }
    const double lower = std::exp(cfg.log_floor + cfg.width * (interval - 2));
    return 0.5 * lower + 0.5 * upper;
}

DotMap read_dot_map(std::istream& in) {
    DotMap dm;
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("dot map: missing 'width height' header");
    }
    {
        std::istringstream hs(line);
        if (!(hs >> dm.width >> dm.height)) {
            throw ConfigError("dot map: malformed header '" + line + "'");
        }
    }
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream ls(line);
        Dot d;
        if (!(ls >> d.x >> d.y)) {
            throw ConfigError("dot map: malformed line '" + line + "'");
        }
        dm.dots.push_back(d);
    }
    dm.validate();
    return dm;
}

void write_dot_map(std::ostream& out, const DotMap& dm) {
    fmt::print(out, "{} {}\n", dm.width, dm.height);
    for (const Dot& d : dm.dots) {
        fmt::print(out, "{:.6f} {:.6f}\n", d.x, d.y);
    }
}

namespace {

void write_grid(std::ostream& out, int rows, int cols, const std::vector<double>& v) {
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            fmt::print(out, "{}{:.6f}", c ? "," : "", v[static_cast<std::size_t>(r) * cols + c]);
        }
        out << '\n';
    }
}

}  // namespace

void write_csv(std::ostream& out, const DensityMap& d) { write_grid(out, d.height, d.width, d.values); }
void write_csv(std::ostream& out, const CountGrid& g) { write_grid(out, g.rows, g.cols, g.values); }

}  // namespace weigh
