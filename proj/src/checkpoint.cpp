#include "bnn/checkpoint.hpp"

#include "bnn/errors.hpp"
#include "serialize.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace bnn {

namespace {
constexpr const char* kFormat = "bnn-checkpoint";
}

std::string checkpoint_to_string(const NetworkState& state) {
    state.validate();
    detail::json doc{{"format", kFormat}, {"version", kCheckpointVersion}, {"network", detail::network_to_json(state)}};
    return doc.dump(1) + "\n";
}

NetworkState checkpoint_from_string(const std::string& text) {
    detail::json doc;
    try {
        doc = detail::json::parse(text);
    } catch (const detail::json::exception& e) {
        throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", std::string()) != kFormat) {
        throw CheckpointError("not a network checkpoint");
    }
    if (!doc.contains("version") || !doc["version"].is_number_integer() ||
        doc["version"].get<int>() != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + (doc.contains("version") ? doc["version"].dump() : "<missing>") +
                              ", expected " + std::to_string(kCheckpointVersion));
    }
    try {
        return detail::network_from_json(doc.at("network"));
    } catch (const detail::json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const NetworkState& state, const std::filesystem::path& path) {
    const std::string text = checkpoint_to_string(state);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

NetworkState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return checkpoint_from_string(ss.str());
}

}  // namespace bnn
