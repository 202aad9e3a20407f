#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace swarmtsc::cli {

/// Git blob id of a file: SHA-1 over "blob <size>\0" followed by the bytes.
std::string git_blob_sha1(const std::string& path);
std::string git_blob_sha1_bytes(const std::string& bytes);

/// Record of one CLI invocation, written next to its outputs whether or not
/// the command succeeded.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  int exit_code = 0;
  std::string error;

  /// Hashes inputs and outputs that exist at call time.
  [[nodiscard]] nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

}  // namespace swarmtsc::cli
