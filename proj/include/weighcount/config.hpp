#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "weighcount/quantizer.hpp"
#include "weighcount/trainer.hpp"

namespace weigh {

// Everything a CLI run depends on. Sections: [run] [synth] [train] [epsilon]
// [episode] [reward] [quantizer] [eval].
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    SynthConfig synth;
    TrainConfig train;
    QuantizerConfig quantizer;
    int image_side = 4;  // eval: patches per image side

    // Copies seed into synth and train.
    void propagate_seed();
    void validate() const;
};

// Missing keys keep their defaults; unknown keys and unparsable values throw ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// Fully resolved config; doubles are written in shortest round-trip form so a reload is exact.
void write_config(std::ostream& out, const RunConfig& cfg);
std::string config_text(const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace weigh
