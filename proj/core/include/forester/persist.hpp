#pragma once

#include <map>
#include <string>
#include <vector>

#include "forester/train.hpp"

namespace forester {

// `.forester-bundle`: a single-file container with a text directory of
// entries in sorted name order and a trailing checksum, so saving the same
// TrainOutput twice yields byte-identical files.
inline constexpr int kBundleSchemaVersion = 1;

void save_output(const TrainOutput& output, const std::string& path);
TrainOutput load_output(const std::string& path);

// Keep only the named models (plus all shared artifacts); leaderboards are
// rebuilt from the surviving rows.
TrainOutput select_models(const TrainOutput& output, const std::vector<std::string>& names);

// Raw archive access, used by tools and tests.
std::map<std::string, std::string> read_bundle_entries(const std::string& path);

} // namespace forester
