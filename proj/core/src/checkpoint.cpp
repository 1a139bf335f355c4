#include "hemix/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "binary_io.hpp"
#include "hemix/config.hpp"

namespace hemix {

void save_checkpoint(const std::string& path, const HemixModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open '" + path + "' for writing");
    os.write(kCheckpointMagic, 4);
    bin::write_le<uint8_t>(os, kCheckpointVersion);
    bin::write_string(os, model_config_to_json(model.config()).dump());
    const ParamRegistry& params = model.params();
    bin::write_le<uint32_t>(os, static_cast<uint32_t>(params.count()));
    for (size_t i = 0; i < params.count(); ++i) {
        const Parameter& p = params.at(i);
        bin::write_string(os, p.name);
        bin::write_le<uint32_t>(os, static_cast<uint32_t>(p.value.rows));
        bin::write_le<uint32_t>(os, static_cast<uint32_t>(p.value.cols));
        for (real_t v : p.value.data) bin::write_f64(os, static_cast<double>(v));
    }
    if (!os) throw InputError("write error on '" + path + "'");
}

HemixModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open checkpoint '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw ConfigError(path + ": not a checkpoint file (bad magic)");
    const uint8_t version = bin::read_le<uint8_t>(is);
    if (version != kCheckpointVersion)
        throw ConfigError(path + ": unsupported checkpoint version " + std::to_string(version));

    nlohmann::json cfg_json;
    try {
        cfg_json = nlohmann::json::parse(bin::read_string(is));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": corrupt embedded config: " + e.what());
    }
    HemixModel model(model_config_from_json(cfg_json));

    ParamRegistry& params = model.params();
    const uint32_t n = bin::read_le<uint32_t>(is);
    if (n != params.count())
        throw InputError(path + ": has " + std::to_string(n) + " parameters, model expects " +
                         std::to_string(params.count()));
    std::vector<bool> seen(params.count(), false);
    for (uint32_t i = 0; i < n; ++i) {
        const std::string name = bin::read_string(is);
        Parameter* p = params.find(name);
        if (!p) throw InputError(path + ": unknown parameter '" + name + "'");
        if (seen[p->index]) throw InputError(path + ": duplicate parameter '" + name + "'");
        seen[p->index] = true;
        const uint32_t rows = bin::read_le<uint32_t>(is);
        const uint32_t cols = bin::read_le<uint32_t>(is);
        if (rows != static_cast<uint32_t>(p->value.rows) ||
            cols != static_cast<uint32_t>(p->value.cols))
            throw InputError(path + ": parameter '" + name + "' is " + std::to_string(rows) + "x" +
                             std::to_string(cols) + ", model expects " + p->value.shape_str());
        for (real_t& v : p->value.data) v = static_cast<real_t>(bin::read_f64(is));
    }
    return model;
}

}  // namespace hemix
