#pragma once

#include <string>

#include <json.hpp>

#include "polyproj/mlp.hpp"
#include "polyproj/synth_data.hpp"

namespace polyproj {

// Shortest decimal form that parses back to the same double; locale-free.
std::string format_double(double v);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// Checkpoint file: one compact JSON header line (dims, activations), then a
// little-endian float64 blob of all parameters in layer order (weights
// column-major, then bias). Round-trips bit-exactly.
void save_model(const std::string& path, const MlpModel& model);
MlpModel load_model(const std::string& path);

// Dataset file: JSON header line (sizes, seed, constraint set, split
// indices), then float64 blobs for inputs and targets, column-major
// (samples contiguous). Round-trips bit-exactly.
void save_dataset(const std::string& path, const SyntheticDataset& ds);
SyntheticDataset load_dataset(const std::string& path);

}  // namespace polyproj
