#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace veritopic {

std::string sha256_hex(const std::filesystem::path& path);

// Sidecar written next to every artifact as <artifact>.manifest.json.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  std::uint64_t seed = 0;
  std::string seed_source;  // "flag", "env" or "default"
  std::string started_at;   // ISO-8601 UTC

  nlohmann::ordered_json to_json() const;
  // Writes <outputs[0]>.manifest.json.
  void write() const;
};

std::string utc_timestamp();
std::filesystem::path manifest_path(const std::filesystem::path& artifact);

}  // namespace veritopic
