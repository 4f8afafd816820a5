#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmcnoc/agent.hpp"
#include "rmcnoc/dense_net.hpp"

namespace rmcnoc {

class WeightFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kWeightFormat = "rmcnoc-weights";
inline constexpr int kWeightVersion = 1;

/// Agent weights for one policy on one mesh.
struct WeightSet {
    std::string policy;  ///< "race" or "cure"
    int mesh_width = 0;
    int mesh_height = 0;
    int subchannels = 0;
    std::string workload;  ///< preset the set was trained for; empty when shared
    std::string credit_scale = "capacity";  ///< RACE observation scaling used in training
    std::vector<std::string> keys;
    std::vector<DenseNet> nets;
};

WeightSet weights_from_pool(const AgentPool& pool, std::string policy, int width, int height, int subchannels);
/// Copies weights into a pool built for the same keys and shapes.
void load_into_pool(const WeightSet& set, AgentPool& pool);

std::string serialize_weights(const WeightSet& set);
WeightSet parse_weights(const std::string& text);
void save_weights(const std::filesystem::path& path, const WeightSet& set);
WeightSet load_weights(const std::filesystem::path& path);

/// Throws WeightFormatError naming the first mismatch.
void check_weights(const WeightSet& set, const std::string& policy, int width, int height, int subchannels,
                   const std::vector<int>& sizes);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace rmcnoc
