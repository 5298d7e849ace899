// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "acnet/matrix.hpp"
#include "acnet/rng.hpp"

namespace acnet_test {

inline acnet::Matrix random_matrix(acnet::Rng& rng, int rows, int cols, double scale = 1.0) {
  acnet::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

inline acnet::Matrix random_unit_rows(acnet::Rng& rng, int rows, int cols) {
  acnet::Matrix m = random_matrix(rng, rows, cols);
  for (int i = 0; i < rows; ++i) {
    double sq = 0.0;
    for (int j = 0; j < cols; ++j) sq += m(i, j) * m(i, j);
    const double n = std::sqrt(sq);
    for (int j = 0; j < cols; ++j) m(i, j) /= n;
  }
  return m;
}

/// Unique scratch directory under the build tree; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("acnet_test_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace acnet_test
