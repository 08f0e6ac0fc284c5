#include "loadprof/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "loadprof/common.hpp"

namespace loadprof {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::missing_file, path.string() + ": cannot open file");

  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);

  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

RunManifest RunManifest::load_or_create(const fs::path& run_dir) {
  RunManifest m;
  m.version = std::string(kVersion);
  const auto path = run_dir / kFileName;
  if (!fs::exists(path)) return m;
  try {
    std::ifstream in(path);
    const auto doc = nlohmann::json::parse(in);
    m.run_id = doc.value("run_id", "");
    m.input_dir = doc.value("input_dir", "");
    m.seed = doc.value("seed", std::uint64_t{0});
    m.configs = doc.value("configs", std::map<std::string, std::string>{});
    for (const auto& [stage, outputs] : doc.at("stages").items()) {
      auto& list = m.stages[stage];
      for (const auto& o : outputs) {
        list.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::malformed_input, path.string() + ": " + e.what());
  }
  return m;
}

void RunManifest::record(const std::string& stage, const fs::path& run_dir,
                         std::span<const fs::path> outputs) {
  auto& list = stages[stage];
  list.clear();
  for (const auto& p : outputs) {
    list.push_back({fs::relative(p, run_dir).generic_string(), sha256_file(p)});
  }
  std::sort(list.begin(), list.end(),
            [](const ManifestOutput& a, const ManifestOutput& b) { return a.path < b.path; });
}

void RunManifest::save(const fs::path& run_dir) const {
  nlohmann::ordered_json doc;
  doc["run_id"] = run_id;
  doc["input_dir"] = input_dir;
  doc["configs"] = configs;
  doc["seed"] = seed;
  doc["version"] = version;
  nlohmann::ordered_json stage_doc = nlohmann::ordered_json::object();
  for (const auto& [stage, outputs] : stages) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& o : outputs) list.push_back({{"path", o.path}, {"sha256", o.sha256}});
    stage_doc[stage] = list;
  }
  doc["stages"] = stage_doc;
  fs::create_directories(run_dir);
  std::ofstream(run_dir / kFileName, std::ios::binary) << doc.dump(2) << '\n';
}

}  // namespace loadprof
