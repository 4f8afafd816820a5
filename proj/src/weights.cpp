#include "rmcnoc/weights.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rmcnoc {

using nlohmann::json;

WeightSet weights_from_pool(const AgentPool& pool, std::string policy, int width, int height, int subchannels) {
    WeightSet set;
    set.policy = std::move(policy);
    set.mesh_width = width;
    set.mesh_height = height;
    set.subchannels = subchannels;
    set.keys = pool.keys();
    for (std::size_t i = 0; i < pool.size(); ++i) set.nets.push_back(pool.agent(i).net());
    return set;
}

void load_into_pool(const WeightSet& set, AgentPool& pool) {
    if (set.keys != pool.keys()) throw WeightFormatError("weight file agent keys do not match the network's channels");
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (set.nets[i].sizes() != pool.sizes()) throw WeightFormatError("agent " + set.keys[i] + " has the wrong layer sizes");
        pool.agent(i).load(set.nets[i]);
    }
}

std::string serialize_weights(const WeightSet& set) {
    json j;
    j["format"] = kWeightFormat;
    j["version"] = kWeightVersion;
    j["policy"] = set.policy;
    j["mesh"] = {set.mesh_width, set.mesh_height};
    j["subchannels"] = set.subchannels;
    j["workload"] = set.workload;
    j["credit_scale"] = set.credit_scale;
    j["agent_count"] = set.nets.size();
    json agents = json::array();
    for (std::size_t i = 0; i < set.nets.size(); ++i) {
        const DenseNet& net = set.nets[i];
        json a;
        a["key"] = set.keys[i];
        a["layers"] = net.sizes();
        a["bias"] = net.has_bias();
        json w = json::array(), b = json::array();
        for (const DenseLayer& l : net.layers()) {
            w.push_back(l.weights);
            b.push_back(l.biases);
        }
        a["weights"] = std::move(w);
        a["biases"] = std::move(b);
        agents.push_back(std::move(a));
    }
    j["agents"] = std::move(agents);
    return j.dump(1) + "\n";
}

WeightSet parse_weights(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw WeightFormatError(std::string("weight file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kWeightFormat) throw WeightFormatError("not an rmcnoc weight file");
        const int version = j.at("version").get<int>();
        if (version != kWeightVersion)
            throw WeightFormatError("weight file version " + std::to_string(version) + ", expected " +
                                    std::to_string(kWeightVersion));
        WeightSet set;
        set.policy = j.at("policy").get<std::string>();
        set.mesh_width = j.at("mesh").at(0).get<int>();
        set.mesh_height = j.at("mesh").at(1).get<int>();
        set.subchannels = j.at("subchannels").get<int>();
        set.workload = j.value("workload", std::string());
        set.credit_scale = j.value("credit_scale", std::string("capacity"));
        for (const json& a : j.at("agents")) {
            set.keys.push_back(a.at("key").get<std::string>());
            DenseNet net(a.at("layers").get<std::vector<int>>(), a.value("bias", true));
            const json& w = a.at("weights");
            const json& b = a.at("biases");
            if (w.size() != net.layers().size() || b.size() != net.layers().size())
                throw WeightFormatError("agent " + set.keys.back() + " has the wrong number of layers");
            for (std::size_t l = 0; l < net.layers().size(); ++l) {
                DenseLayer& layer = net.layers()[l];
                auto wv = w[l].get<std::vector<double>>();
                auto bv = b[l].get<std::vector<double>>();
                if (wv.size() != layer.weights.size() || bv.size() != layer.biases.size())
                    throw WeightFormatError("agent " + set.keys.back() + " layer " + std::to_string(l) +
                                            " has the wrong number of parameters");
                layer.weights = std::move(wv);
                layer.biases = std::move(bv);
            }
            set.nets.push_back(std::move(net));
        }
        if (j.at("agent_count").get<std::size_t>() != set.nets.size())
            throw WeightFormatError("agent_count does not match the stored agents");
        return set;
    } catch (const json::exception& e) {
        throw WeightFormatError(std::string("malformed weight file: ") + e.what());
    }
}

void save_weights(const std::filesystem::path& path, const WeightSet& set) {
    write_file_atomic(path, serialize_weights(set));
}

WeightSet load_weights(const std::filesystem::path& path) { return parse_weights(read_file(path)); }

void check_weights(const WeightSet& set, const std::string& policy, int width, int height, int subchannels,
                   const std::vector<int>& sizes) {
    if (set.policy != policy)
        throw WeightFormatError("weights were trained for policy '" + set.policy + "', not '" + policy + "'");
    if (set.mesh_width != width || set.mesh_height != height)
        throw WeightFormatError("weights are for a " + std::to_string(set.mesh_width) + "x" +
                                std::to_string(set.mesh_height) + " mesh, not " + std::to_string(width) + "x" +
                                std::to_string(height));
    if (set.subchannels != subchannels)
        throw WeightFormatError("weights are for S=" + std::to_string(set.subchannels) +
                                " subchannels, not S=" + std::to_string(subchannels));
    for (std::size_t i = 0; i < set.nets.size(); ++i)
        if (set.nets[i].sizes() != sizes) throw WeightFormatError("agent " + set.keys[i] + " has the wrong layer sizes");
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace rmcnoc
