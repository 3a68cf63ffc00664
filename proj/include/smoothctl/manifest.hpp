#pragma once

// Run manifest written next to every output: command line, seed, version and
// SHA-256 digests of the files read and written. Digests use OpenSSL, so
// targets including this header link OpenSSL::Crypto.

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothctl/errors.hpp"
#include "smoothctl/io.hpp"

namespace smoothctl {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericError("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::optional<std::uint64_t> seed;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  std::string to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["arguments"] = arguments;
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    j["tool_version"] = kToolVersion;
    auto digests = [](const std::vector<std::filesystem::path>& files) {
      nlohmann::json d = nlohmann::json::array();
      for (const auto& f : files)
        d.push_back({{"path", f.string()}, {"sha256", sha256_hex(io::read_file(f))}});
      return d;
    };
    j["inputs"] = digests(inputs);
    j["outputs"] = digests(outputs);
    return j.dump(2) + "\n";
  }

  /// Sidecar "<first output>.manifest.json".
  std::filesystem::path sidecar_path() const {
    if (outputs.empty()) throw DomainError("RunManifest: no outputs");
    return outputs.front().string() + ".manifest.json";
  }

  void write() const { io::write_atomic(sidecar_path(), to_json()); }
};

}  // namespace smoothctl
