#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>

namespace swarmtsc::cli {

namespace {

std::string hex(const unsigned char* p, unsigned n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < n; ++i) {
    s += digits[p[i] >> 4];
    s += digits[p[i] & 0xF];
  }
  return s;
}

}  // namespace

std::string git_blob_sha1_bytes(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw std::runtime_error("sha1 digest failed");
  }
  return hex(md.data(), len);
}

std::string git_blob_sha1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return git_blob_sha1_bytes(bytes);
}

nlohmann::json Manifest::to_json() const {
  const auto files = [](const std::vector<std::string>& paths) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : paths) {
      nlohmann::json f = {{"path", p}};
      std::error_code ec;
      if (std::filesystem::is_regular_file(p, ec)) {
        f["sha1"] = git_blob_sha1(p);
        f["bytes"] = std::filesystem::file_size(p, ec);
      } else {
        f["sha1"] = nullptr;
      }
      a.push_back(f);
    }
    return a;
  };
  return {
      {"kind", "manifest"},
      {"tool", "swarmtsc"},
      {"command", command},
      {"argv", argv},
      {"config", config},
      {"inputs", files(inputs)},
      {"outputs", files(outputs)},
      {"status", exit_code == 0 ? "ok" : "error"},
      {"exit_code", exit_code},
      {"error", error},
  };
}

void Manifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
  out << to_json().dump(2) << '\n';
}

}  // namespace swarmtsc::cli
