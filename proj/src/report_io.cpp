#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "imbalkit/error.hpp"
#include "imbalkit/report.hpp"

namespace fs = std::filesystem;

namespace imbalkit {

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < length; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
  return out.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

void update_manifest(const fs::path& out_dir, const std::string& command, const RunConfig& config,
                     const nlohmann::ordered_json& entry) {
  const fs::path manifest_path = out_dir / "run-manifest.json";
  nlohmann::ordered_json commands = nlohmann::ordered_json::object();
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    auto old = nlohmann::ordered_json::parse(in, nullptr, false);
    if (!old.is_discarded() && old.contains("commands") && old["commands"].is_object()) commands = old["commands"];
  }
  commands[command] = entry;

  nlohmann::ordered_json manifest;
  manifest["tool"] = "imbalkit";
  manifest["version"] = kVersion;
  manifest["libraries"] = {
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                            "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  manifest["config_sha256"] = config.config_sha256;
  manifest["seed"] = config.seed;
  manifest["resample_test"] = config.resample_test;
  manifest["commands"] = commands;

  std::vector<std::string> paths;
  for (const auto& item : fs::recursive_directory_iterator(out_dir)) {
    if (!item.is_regular_file()) continue;
    std::string rel = fs::relative(item.path(), out_dir).generic_string();
    if (rel == "run-manifest.json" || rel.ends_with(".partial")) continue;
    paths.push_back(rel);
  }
  std::sort(paths.begin(), paths.end());
  auto files = nlohmann::ordered_json::array();
  for (const auto& rel : paths) {
    files.push_back({{"path", rel}, {"sha256", sha256_file(out_dir / rel)}, {"bytes", fs::file_size(out_dir / rel)}});
  }
  manifest["files"] = files;
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

}  // namespace imbalkit
