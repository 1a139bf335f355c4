#pragma once

#include <string>

#include "hemix/synthetic.hpp"

namespace hemix {

// Binary dataset file: magic "HMXD", format-version byte, a JSON header
// carrying the schema and split sizes, then length-prefixed sample records.
// Round-trips bit-exactly; see docs/file_formats.md.
void write_dataset(const std::string& path, const GeneratedDataset& ds);
GeneratedDataset read_dataset(const std::string& path);

// Header only (schema echo, counts) without loading the samples.
struct DatasetInfo {
    FeatureSchema schema;
    int64_t n_samples = 0;
    int64_t n_train = 0;
    int64_t positive_count = 0;
    uint64_t seed = 0;
};
DatasetInfo read_dataset_info(const std::string& path);

inline constexpr char kDatasetMagic[4] = {'H', 'M', 'X', 'D'};
inline constexpr uint8_t kDatasetVersion = 1;

}  // namespace hemix
