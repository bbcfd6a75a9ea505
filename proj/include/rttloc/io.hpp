#pragma once

// File formats.
//
//   scans CSV   ref_id,x,y,rtt_0..rtt_{K-1},mask_0..mask_{K-1}   (ref_id -1 = unlabeled)
//   testbed     {width, height, transmitters:[[x,y]..], receivers:[[x,y]..],
//                reference_points:[{id,x,y}..], test_points:[{id,x,y}..]}
//   model store {K, hidden_dim, activation, stack_depth, norm_params:{min,max},
//                models:[{ref_point_id,x,y,W,b_enc,b_dec,train_meta,deeper_layers?}..]}

#include "rttloc/dae.hpp"
#include "rttloc/fingerprint.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rttloc {

void write_scans(std::ostream& out, std::span<const ScanRecord> rows, std::size_t k);
void save_scans(const std::filesystem::path& path, std::span<const ScanRecord> rows, std::size_t k);

/// An empty file (or header only) yields no rows. When `expected_k` is set a
/// header with a different K is a ParseError.
std::vector<ScanRecord> read_scans(std::istream& in, const std::string& source,
                                   std::optional<std::size_t> expected_k = std::nullopt);
std::vector<ScanRecord> load_scans(const std::filesystem::path& path,
                                   std::optional<std::size_t> expected_k = std::nullopt);

nlohmann::json testbed_to_json(const Testbed& tb);
Testbed testbed_from_json(const nlohmann::json& j);
void save_testbed(const std::filesystem::path& path, const Testbed& tb);
Testbed load_testbed(const std::filesystem::path& path);

nlohmann::json store_to_json(const ModelRegistry& registry);
ModelRegistry store_from_json(const nlohmann::json& j);
void save_model_store(const std::filesystem::path& path, const ModelRegistry& registry);
ModelRegistry load_model_store(const std::filesystem::path& path);

/// Canonical text used for every JSON file we write.
std::string dump_json(const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace rttloc
