#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "rebar2bim/error.hpp"

namespace testing {

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rebar2bim_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// True when f throws rebar2bim::Error with the expected code.
template <typename F>
bool throws_code(F&& f, rebar2bim::ErrorCode expected) {
  try {
    f();
  } catch (const rebar2bim::Error& e) {
    return e.code() == expected;
  }
  return false;
}

}  // namespace testing
