#pragma once

// Output bundle: every emitted file is recorded in manifest.json with its
// SHA-256 digest. Wall-clock timings go to timings.json, which the manifest
// names but does not hash, so that the rest of the bundle is reproducible.

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vhj/errors.hpp"

namespace vhj {

using ojson = nlohmann::ordered_json;

inline constexpr const char *kToolVersion = "vhj 1.0.0";

inline std::string sha256_hex(const std::string &data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256: digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return os.str();
}

/// Headered comma-separated columns with round-trip precision.
inline std::string csv(const std::vector<std::string> &header, const std::vector<std::vector<double>> &columns) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c][r];
    os << '\n';
  }
  return os.str();
}

class OutputBundle {
public:
  explicit OutputBundle(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigurationError("output: cannot create directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path &dir() const { return dir_; }

  void write(const std::string &name, const std::string &content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw Error("output: cannot write " + (dir_ / name).string());
    out << content;
    files_[name] = sha256_hex(content);
  }

  void write_json(const std::string &name, const ojson &j) { write(name, j.dump(2) + "\n"); }

  void timing(const std::string &label, double seconds) { timings_[label] = seconds; }

  /// Writes timings.json and manifest.json.
  void finish(const ojson &config_echo, const std::string &subcommand) {
    {
      std::ofstream out(dir_ / "timings.json");
      out << timings_.dump(2) << "\n";
    }
    ojson m;
    m["tool"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["config"] = config_echo;
    ojson files = ojson::array();
    for (const auto &[name, digest] : files_) files.push_back({{"file", name}, {"sha256", digest}});
    m["files"] = files;
    m["unhashed"] = ojson::array({"timings.json"});
    std::ofstream out(dir_ / "manifest.json");
    out << m.dump(2) << "\n";
  }

private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
  ojson timings_ = ojson::object();
};

} // namespace vhj
