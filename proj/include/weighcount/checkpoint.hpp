#pragma once

#include <string>

#include "weighcount/trainer.hpp"

namespace weigh {

inline constexpr int kCheckpointVersion = 1;

class VersionMismatch : public WeighError {
public:
    explicit VersionMismatch(int found);
};

class CorruptFile : public WeighError {
public:
    using WeighError::WeighError;
};

struct Checkpoint {
    std::string config;  // resolved config text of the run that wrote it
    TrainerState state;
};

// JSON with every double as a 17-significant-digit string. Replay transitions store
// the dataset patch id instead of the feature vector.
std::string checkpoint_json(const Checkpoint& ck);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Reattaches feature vectors to the replay transitions of a loaded state.
void bind_features(TrainerState& state, const Dataset& data);

}  // namespace weigh
