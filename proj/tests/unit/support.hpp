#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "utep/ndgrad/array2.hpp"
#include "utep/ndgrad/rng.hpp"

namespace utep::test {

using ndgrad::Array2;
using ndgrad::RngStream;

inline Array2 random_array(std::size_t r, std::size_t c, RngStream& rng, double lo = -2.0, double hi = 2.0) {
  Array2 a(r, c);
  for (double& v : a.data()) v = rng.uniform(lo, hi);
  return a;
}

/// Random probability row (Dirichlet(1) via normalized exponentials).
inline std::vector<double> random_simplex(std::size_t c, RngStream& rng) {
  std::vector<double> g(c);
  double total = 0.0;
  for (double& v : g) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (double& v : g) v /= total;
  return g;
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("utep_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace utep::test
