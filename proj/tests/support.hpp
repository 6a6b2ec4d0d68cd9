#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "simgrade/embed.hpp"
#include "simgrade/error.hpp"

// Asserts that `expr` throws simgrade::Error carrying `ecode`.
#define REQUIRE_THROWS_CODE(expr, ecode)                               \
  do {                                                                  \
    bool thrown_ = false;                                               \
    try {                                                               \
      (void)(expr);                                                     \
    } catch (const simgrade::Error& e_) {                               \
      thrown_ = true;                                                   \
      INFO(e_.what());                                                  \
      REQUIRE(e_.code() == (ecode));                                    \
    }                                                                   \
    REQUIRE(thrown_);                                                   \
  } while (false)

namespace test_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("simgrade_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
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

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative path -> file bytes for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  }
  return files;
}

inline std::string id_of(std::size_t i) {
  std::string s = std::to_string(i);
  return "s" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

// Gaussian vectors with ids s0000, s0001, ...
inline std::vector<simgrade::embed::ProgramEmbedding> random_embeddings(std::size_t n, std::size_t dim,
                                                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<simgrade::embed::ProgramEmbedding> out;
  for (std::size_t i = 0; i < n; ++i) {
    simgrade::embed::ProgramEmbedding e{id_of(i), std::vector<double>(dim)};
    for (auto& v : e.vector) v = g(rng);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<std::string> ids_of(const std::vector<simgrade::embed::ProgramEmbedding>& embs) {
  std::vector<std::string> ids;
  for (const auto& e : embs) ids.push_back(e.submission_id);
  return ids;
}

}  // namespace test_support
