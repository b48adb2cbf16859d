#include "weighcount/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace weigh {

namespace {

namespace pt = boost::property_tree;

struct Key {
    const char* section;
    const char* name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::string fmt_double(double v) { return fmt::format("{}", v); }

double parse_double(const std::string& key, const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size()) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, s));
    }
    return v;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& s) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError(fmt::format("{}: '{}' is not a valid integer", key, s));
    }
    return v;
}

template <typename Int, typename Field>
Key int_key(const char* section, const char* name, Field field) {
    return Key{section, name,
               [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); },
               [field, section, name](RunConfig& c, const std::string& s) {
                   field(c) = parse_int<Int>(fmt::format("{}.{}", section, name), s);
               }};
}

template <typename Field>
Key double_key(const char* section, const char* name, Field field) {
    return Key{section, name,
               [field](const RunConfig& c) { return fmt_double(field(const_cast<RunConfig&>(c))); },
               [field, section, name](RunConfig& c, const std::string& s) {
                   field(c) = parse_double(fmt::format("{}.{}", section, name), s);
               }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(int_key<std::uint64_t>("run", "seed", [](RunConfig& c) -> auto& { return c.seed; }));
        k.push_back(Key{"run", "out_dir", [](const RunConfig& c) { return c.out_dir; },
                        [](RunConfig& c, const std::string& s) { c.out_dir = s; }});

        k.push_back(int_key<std::size_t>("synth", "num_patches", [](RunConfig& c) -> auto& { return c.synth.num_patches; }));
        k.push_back(int_key<int>("synth", "max_interval", [](RunConfig& c) -> auto& { return c.synth.max_interval; }));
        k.push_back(double_key("synth", "tail_exponent", [](RunConfig& c) -> auto& { return c.synth.tail_exponent; }));
        k.push_back(double_key("synth", "zero_fraction", [](RunConfig& c) -> auto& { return c.synth.zero_fraction; }));
        k.push_back(int_key<std::size_t>("synth", "feature_dim", [](RunConfig& c) -> auto& { return c.synth.feature_dim; }));
        k.push_back(double_key("synth", "noise_sigma", [](RunConfig& c) -> auto& { return c.synth.noise_sigma; }));
        k.push_back(double_key("synth", "holdout_fraction", [](RunConfig& c) -> auto& { return c.synth.holdout_fraction; }));

        k.push_back(int_key<int>("train", "epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }));
        k.push_back(double_key("train", "lr", [](RunConfig& c) -> auto& { return c.train.lr; }));
        k.push_back(int_key<std::size_t>("train", "update_every", [](RunConfig& c) -> auto& { return c.train.update_every; }));
        k.push_back(int_key<std::size_t>("train", "batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; }));
        k.push_back(int_key<std::size_t>("train", "replay_capacity", [](RunConfig& c) -> auto& { return c.train.replay_capacity; }));
        k.push_back(int_key<std::size_t>("train", "hidden", [](RunConfig& c) -> auto& { return c.train.hidden; }));
        k.push_back(Key{"train", "reward_mode", [](const RunConfig& c) { return to_string(c.train.setup.mode); },
                        [](RunConfig& c, const std::string& s) { c.train.setup.mode = reward_mode_from_string(s); }});

        k.push_back(double_key("epsilon", "start", [](RunConfig& c) -> auto& { return c.train.epsilon.start; }));
        k.push_back(double_key("epsilon", "floor", [](RunConfig& c) -> auto& { return c.train.epsilon.floor; }));
        k.push_back(double_key("epsilon", "step", [](RunConfig& c) -> auto& { return c.train.epsilon.step; }));

        k.push_back(int_key<int>("episode", "max_steps", [](RunConfig& c) -> auto& { return c.train.setup.episode.max_steps; }));
        k.push_back(double_key("episode", "gamma", [](RunConfig& c) -> auto& { return c.train.setup.episode.gamma; }));
        k.push_back(Key{"episode", "pool", [](const RunConfig& c) { return to_string(c.train.setup.episode.pool.mode()); },
                        [](RunConfig& c, const std::string& s) {
                            c.train.setup.episode.pool = ActionPool::for_mode(pool_mode_from_string(s));
                        }});

        k.push_back(double_key("reward", "ending", [](RunConfig& c) -> auto& { return c.train.setup.rewards.ending; }));
        k.push_back(double_key("reward", "optimal_bonus", [](RunConfig& c) -> auto& { return c.train.setup.rewards.optimal_bonus; }));
        k.push_back(double_key("reward", "closer_bonus", [](RunConfig& c) -> auto& { return c.train.setup.rewards.closer_bonus; }));
        k.push_back(double_key("reward", "farther_penalty", [](RunConfig& c) -> auto& { return c.train.setup.rewards.farther_penalty; }));
        k.push_back(double_key("reward", "squeezed_optimal", [](RunConfig& c) -> auto& { return c.train.setup.rewards.squeezed_optimal; }));
        k.push_back(double_key("reward", "squeezed_other", [](RunConfig& c) -> auto& { return c.train.setup.rewards.squeezed_other; }));
        k.push_back(double_key("reward", "end_tolerance", [](RunConfig& c) -> auto& { return c.train.setup.rewards.end_tolerance; }));
        k.push_back(double_key("reward", "squeeze_tolerance", [](RunConfig& c) -> auto& { return c.train.setup.rewards.squeeze_tolerance; }));

        k.push_back(double_key("quantizer", "width", [](RunConfig& c) -> auto& { return c.quantizer.width; }));
        k.push_back(double_key("quantizer", "log_floor", [](RunConfig& c) -> auto& { return c.quantizer.log_floor; }));
        k.push_back(double_key("quantizer", "beta", [](RunConfig& c) -> auto& { return c.quantizer.beta; }));
        k.push_back(int_key<int>("quantizer", "patch", [](RunConfig& c) -> auto& { return c.quantizer.patch; }));
        k.push_back(int_key<int>("eval", "image_side", [](RunConfig& c) -> auto& { return c.image_side; }));
        return k;
    }();
    return table;
}

}  // namespace

void RunConfig::propagate_seed() {
    synth.seed = seed;
    train.seed = seed;
}

void RunConfig::validate() const {
    synth.validate();
    train.validate();
    quantizer.validate();
    if (image_side < 1) {
        throw ConfigError("eval.image_side must be >= 1");
    }
    if (out_dir.empty()) {
        throw ConfigError("run.out_dir must not be empty");
    }
}

RunConfig parse_config(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    RunConfig cfg;
    // pool first: it resets the reward tolerance default for continuous pools
    if (auto pool = tree.get_optional<std::string>("episode.pool")) {
        const PoolMode mode = [&] {
            try {
                return pool_mode_from_string(*pool);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }();
        cfg.train.setup.episode.pool = ActionPool::for_mode(mode);
        cfg.train.setup.rewards = RewardConfig::for_mode(mode);
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("config: key '" + section + "' outside of a section");
        }
        for (const auto& [name, value] : body) {
            const Key* match = nullptr;
            for (const Key& k : keys()) {
                if (section == k.section && name == k.name) {
                    match = &k;
                }
            }
            if (!match) {
                throw ConfigError("config: unknown key " + section + "." + name);
            }
            try {
                match->set(cfg, value.data());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
    }
    cfg.propagate_seed();
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
    std::string section;
    for (const Key& k : keys()) {
        if (section != k.section) {
            if (!section.empty()) {
                out << '\n';
            }
            section = k.section;
            out << '[' << section << "]\n";
        }
        out << k.name << " = " << k.get(cfg) << '\n';
    }
}

std::string config_text(const RunConfig& cfg) {
    std::ostringstream ss;
    write_config(ss, cfg);
    return ss.str();
}

void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    write_config(out, cfg);
    if (!out) {
        throw WeighError("failed writing " + path);
    }
}

}  // namespace weigh
