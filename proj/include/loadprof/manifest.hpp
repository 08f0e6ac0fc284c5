#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace loadprof {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct ManifestOutput {
  std::string path;  // relative to the run directory
  std::string sha256;
};

/// `manifest.json` in a run directory: what each stage produced.
struct RunManifest {
  std::string run_id;
  std::string input_dir;
  std::map<std::string, std::string> configs;  // stage -> config file
  std::map<std::string, std::vector<ManifestOutput>> stages;
  std::string version;
  std::uint64_t seed = 0;

  static constexpr const char* kFileName = "manifest.json";

  /// Reads the run directory's manifest, or starts an empty one.
  static RunManifest load_or_create(const std::filesystem::path& run_dir);

  /// Replaces the stage's outputs with fresh digests of `outputs`.
  void record(const std::string& stage, const std::filesystem::path& run_dir,
              std::span<const std::filesystem::path> outputs);

  void save(const std::filesystem::path& run_dir) const;
};

}  // namespace loadprof
