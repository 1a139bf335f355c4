#include "hemix/dataset_io.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "schema_json.hpp"

namespace hemix {

using nlohmann::json;

namespace {

DatasetInfo read_header(std::istream& is, const std::string& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw InputError(path + ": not a dataset file (bad magic)");
    const uint8_t version = bin::read_le<uint8_t>(is);
    if (version != kDatasetVersion)
        throw InputError(path + ": unsupported dataset version " + std::to_string(version));
    json header;
    try {
        header = json::parse(bin::read_string(is));
    } catch (const json::exception& e) {
        throw InputError(path + ": corrupt dataset header: " + e.what());
    }
    DatasetInfo info;
    info.schema = schema_from_parsed_json(header.at("schema"));
    info.n_samples = header.at("n_samples").get<int64_t>();
    info.n_train = header.at("n_train").get<int64_t>();
    info.positive_count = header.at("positive_count").get<int64_t>();
    info.seed = header.at("seed").get<uint64_t>();
    return info;
}

}  // namespace

void write_dataset(const std::string& path, const GeneratedDataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open '" + path + "' for writing");
    os.write(kDatasetMagic, 4);
    bin::write_le<uint8_t>(os, kDatasetVersion);
    json header{{"schema", schema_to_parsed_json(ds.schema)},
                {"n_samples", static_cast<int64_t>(ds.samples.size())},
                {"n_train", ds.n_train},
                {"positive_count", ds.positive_count},
                {"seed", ds.seed}};
    bin::write_string(os, header.dump());
    bin::write_le<uint64_t>(os, ds.samples.size());
    for (const Sample& s : ds.samples) {
        const uint32_t record_len =
            4 * uint32_t(s.ns_ids.size()) + 2 + 4 * uint32_t(s.global_ids.size()) + 2 +
            4 * uint32_t(s.realtime_ids.size()) + 1;
        bin::write_le<uint32_t>(os, record_len);
        for (uint32_t id : s.ns_ids) bin::write_le<uint32_t>(os, id);
        bin::write_le<uint16_t>(os, uint16_t(s.global_len));
        for (uint32_t id : s.global_ids) bin::write_le<uint32_t>(os, id);
        bin::write_le<uint16_t>(os, uint16_t(s.realtime_len));
        for (uint32_t id : s.realtime_ids) bin::write_le<uint32_t>(os, id);
        bin::write_le<uint8_t>(os, s.label);
    }
    if (!os) throw InputError("write error on '" + path + "'");
}

GeneratedDataset read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open dataset file '" + path + "'");
    const DatasetInfo info = read_header(is, path);

    GeneratedDataset ds;
    ds.schema = info.schema;
    ds.n_train = info.n_train;
    ds.seed = info.seed;
    const uint64_t n = bin::read_le<uint64_t>(is);
    if (static_cast<int64_t>(n) != info.n_samples)
        throw InputError(path + ": record count disagrees with header");
    const size_t nsf = ds.schema.seq_fields.size();
    ds.samples.resize(n);
    for (uint64_t i = 0; i < n; ++i) {
        Sample& s = ds.samples[i];
        const uint32_t record_len = bin::read_le<uint32_t>(is);
        s.ns_ids.resize(ds.schema.ns_fields.size());
        for (auto& id : s.ns_ids) id = bin::read_le<uint32_t>(is);
        s.global_len = bin::read_le<uint16_t>(is);
        s.global_ids.resize(size_t(s.global_len) * nsf);
        for (auto& id : s.global_ids) id = bin::read_le<uint32_t>(is);
        s.realtime_len = bin::read_le<uint16_t>(is);
        s.realtime_ids.resize(size_t(s.realtime_len) * nsf);
        for (auto& id : s.realtime_ids) id = bin::read_le<uint32_t>(is);
        s.label = bin::read_le<uint8_t>(is);
        const uint32_t expected =
            4 * uint32_t(s.ns_ids.size()) + 2 + 4 * uint32_t(s.global_ids.size()) + 2 +
            4 * uint32_t(s.realtime_ids.size()) + 1;
        if (record_len != expected)
            throw InputError(path + ": record " + std::to_string(i) + " has inconsistent length");
        validate_sample(s, ds.schema);
        ds.positive_count += s.label;
    }
    if (ds.positive_count != info.positive_count)
        throw InputError(path + ": positive count disagrees with header");
    return ds;
}

DatasetInfo read_dataset_info(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open dataset file '" + path + "'");
    return read_header(is, path);
}

}  // namespace hemix
