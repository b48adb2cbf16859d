#include "weighcount/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace weigh {

using nlohmann::json;

VersionMismatch::VersionMismatch(int found)
    : WeighError(fmt::format("checkpoint version {} is not supported (expected {})", found, kCheckpointVersion)) {}

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

double to_double(const json& j) {
    const std::string& s = j.get_ref<const std::string&>();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw CorruptFile("checkpoint: bad number '" + s + "'");
    }
    return v;
}

json doubles(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) {
        out.push_back(num(x));
    }
    return out;
}

json doubles(std::span<const double> v) { return doubles(std::vector<double>(v.begin(), v.end())); }

std::vector<double> read_doubles(const json& j) {
    std::vector<double> out;
    for (const json& x : j) {
        out.push_back(to_double(x));
    }
    return out;
}

json params_json(const QNetParams& p) {
    return json{{"inputs", p.inputs},       {"hidden", p.hidden},   {"outputs", p.outputs},
                {"weight_scale", num(p.weight_scale)},              {"w1", doubles(p.w1)},
                {"b1", doubles(p.b1)},      {"w2", doubles(p.w2)},  {"b2", doubles(p.b2)}};
}

QNetParams read_params(const json& j) {
    QNetParams p;
    p.inputs = j.at("inputs").get<std::size_t>();
    p.hidden = j.at("hidden").get<std::size_t>();
    p.outputs = j.at("outputs").get<std::size_t>();
    p.weight_scale = to_double(j.at("weight_scale"));
    p.w1 = read_doubles(j.at("w1"));
    p.b1 = read_doubles(j.at("b1"));
    p.w2 = read_doubles(j.at("w2"));
    p.b2 = read_doubles(j.at("b2"));
    if (p.w1.size() != p.hidden * p.inputs || p.b1.size() != p.hidden || p.w2.size() != p.outputs * p.hidden ||
        p.b2.size() != p.outputs) {
        throw CorruptFile("checkpoint: parameter arrays do not match the declared shape");
    }
    return p;
}

json weights_json(const WeightVector& w) {
    return json{{"filled", w.filled()}, {"integral", w.integral()}, {"slots", doubles(w.slots())}};
}

WeightVector read_weights(const json& j) {
    try {
        return WeightVector(read_doubles(j.at("slots")), j.at("filled").get<std::size_t>(),
                            j.at("integral").get<bool>());
    } catch (const std::invalid_argument& e) {
        throw CorruptFile(std::string("checkpoint: ") + e.what());
    }
}

}  // namespace

std::string checkpoint_json(const Checkpoint& ck) {
    const TrainerState& s = ck.state;
    json buffer = json::array();
    for (const Transition& t : s.buffer) {
        buffer.push_back(json{{"patch", t.patch},
                              {"state", weights_json(t.state.weights)},
                              {"action", t.action},
                              {"next", weights_json(t.next.weights)},
                              {"reward", num(t.reward)},
                              {"terminal", t.terminal}});
    }
    json history = json::array();
    for (const EpochMetrics& m : s.history) {
        history.push_back(json{{"epoch", m.epoch},
                               {"epsilon", num(m.epsilon)},
                               {"mean_loss", num(m.mean_loss)},
                               {"updates", m.updates},
                               {"holdout_mae", num(m.holdout_mae)}});
    }
    json doc{{"version", kCheckpointVersion},
             {"config", ck.config},
             {"epoch", s.epoch},
             {"epsilon", num(s.epsilon)},
             {"rng", s.rng_state},
             {"params", params_json(s.params)},
             {"target", params_json(s.target)},
             {"pending", s.pending},
             {"buffer", std::move(buffer)},
             {"history", std::move(history)}};
    return doc.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw CorruptFile(std::string("checkpoint: ") + e.what());
    }
    try {
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw VersionMismatch(version);
        }
        Checkpoint ck;
        ck.config = doc.at("config").get<std::string>();
        TrainerState& s = ck.state;
        s.epoch = doc.at("epoch").get<int>();
        s.epsilon = to_double(doc.at("epsilon"));
        s.rng_state = doc.at("rng").get<std::string>();
        s.params = read_params(doc.at("params"));
        s.target = read_params(doc.at("target"));
        s.pending = doc.at("pending").get<std::size_t>();
        for (const json& t : doc.at("buffer")) {
            Transition tr;
            tr.patch = t.at("patch").get<std::size_t>();
            tr.state.weights = read_weights(t.at("state"));
            tr.action = t.at("action").get<std::size_t>();
            tr.next.weights = read_weights(t.at("next"));
            tr.reward = to_double(t.at("reward"));
            tr.terminal = t.at("terminal").get<bool>();
            s.buffer.push_back(std::move(tr));
        }
        for (const json& m : doc.at("history")) {
            s.history.push_back(EpochMetrics{m.at("epoch").get<int>(), to_double(m.at("epsilon")),
                                             to_double(m.at("mean_loss")), m.at("updates").get<std::size_t>(),
                                             to_double(m.at("holdout_mae"))});
        }
        return ck;
    } catch (const json::exception& e) {
        throw CorruptFile(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << checkpoint_json(ck);
    if (!out) {
        throw WeighError("failed writing " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw WeighError("cannot open checkpoint " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_checkpoint(ss.str());
}

void bind_features(TrainerState& state, const Dataset& data) {
    for (Transition& t : state.buffer) {
        if (t.patch >= data.patches.size()) {
            throw CorruptFile(fmt::format("checkpoint: replay references unknown patch {}", t.patch));
        }
        t.state.feature = data.patches[t.patch].feature;
        t.next.feature = t.state.feature;
    }
}

}  // namespace weigh
