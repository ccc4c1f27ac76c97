// Copyright 2026 The dnmf Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dnmf/matrix_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "dnmf/error.hpp"
#include "support/oracles.hpp"

namespace dnmf {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("dnmf_io_test_" + std::to_string(::getpid()) + "_" + name);
}

TEST(DmatTest, HeaderBytesAreExact) {
  const Matrix a = Matrix::from_rows({{1.5, -2.0, 3.0}, {4.0, 0.25, 6.0}});
  const auto bytes = encode_dmat(a);
  ASSERT_EQ(bytes.size(), kDmatHeaderBytes + 6 * sizeof(double));
  // "DMAT", version 1, rows 2, cols 3, little-endian.
  const std::uint8_t header[24] = {'D', 'M', 'A', 'T', 1, 0, 0, 0, 2, 0, 0, 0,
                                   0,   0,   0,   0,   3, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_EQ(std::memcmp(bytes.data(), header, 24), 0);
  // Body is column-major: (0,0), (1,0), (0,1), ...
  double first_two[2];
  std::memcpy(first_two, bytes.data() + 24, sizeof(first_two));
  EXPECT_EQ(first_two[0], 1.5);
  EXPECT_EQ(first_two[1], 4.0);
  EXPECT_EQ(dmat_encoded_size(a), bytes.size());
}

TEST(DmatTest, RoundTripIsBitExact) {
  testing::Gen gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a = gen.matrix(gen.index(1, 9), gen.index(1, 9), -1e6, 1e6);
    a(0, 0) = std::numeric_limits<double>::denorm_min();
    const Matrix back = decode_dmat(encode_dmat(a));
    ASSERT_EQ(back.rows(), a.rows());
    EXPECT_EQ(std::memcmp(back.data(), a.data(), a.size() * sizeof(double)), 0);
  }
}

TEST(DmatTest, RejectsMalformedInput) {
  auto bytes = encode_dmat(Matrix(2, 2, 1.0));
  {
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_dmat(bad), IoError);
  }
  {
    auto bad = bytes;
    bad[4] = 2;
    EXPECT_THROW(decode_dmat(bad), IoError);
  }
  {
    auto bad = bytes;
    bad.pop_back();
    EXPECT_THROW(decode_dmat(bad), IoError);
  }
  {
    std::vector<std::uint8_t> tiny(bytes.begin(), bytes.begin() + 10);
    EXPECT_THROW(decode_dmat(tiny), IoError);
  }
  {
    auto bad = bytes;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::memcpy(bad.data() + 24, &nan, sizeof(nan));
    EXPECT_THROW(decode_dmat(bad), IoError);
  }
  {
    auto bad = bytes;
    for (int t = 8; t < 16; ++t) bad[t] = 0xff;  // rows = 2^64 - 1
    EXPECT_THROW(decode_dmat(bad), IoError);
  }
}

TEST(DmatTest, FileRoundTrip) {
  const Matrix a = testing::Gen(22).matrix(5, 7);
  const fs::path p = temp_path("a.dmat");
  save_matrix(a, p);
  EXPECT_EQ(load_matrix(p), a);
  EXPECT_EQ(fs::file_size(p), kDmatHeaderBytes + a.size() * sizeof(double));
  fs::remove(p);
  EXPECT_THROW(load_dmat(p), IoError);
}

TEST(CsvTest, RowPerLineFormat) {
  std::ostringstream os;
  write_csv(Matrix::from_rows({{1, 2.5}, {-3, 0}}), os);
  EXPECT_EQ(os.str(), "1,2.5\n-3,0\n");
}

TEST(CsvTest, RoundTripIsBitExact) {
  testing::Gen gen(23);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = gen.matrix(gen.index(1, 6), gen.index(1, 6), -1e3, 1e3);
    std::stringstream ss;
    write_csv(a, ss);
    EXPECT_EQ(read_csv(ss), a);
  }
}

TEST(CsvTest, RejectsRaggedAndGarbage) {
  {
    std::istringstream is("1,2\n3\n");
    EXPECT_THROW(read_csv(is), IoError);
  }
  {
    std::istringstream is("1,abc\n");
    EXPECT_THROW(read_csv(is), IoError);
  }
  {
    std::istringstream is("");
    EXPECT_THROW(read_csv(is), IoError);
  }
  {
    std::istringstream is("1,,2\n");
    EXPECT_THROW(read_csv(is), IoError);
  }
}

TEST(CsvTest, ConvertThroughFilesPreservesValues) {
  const Matrix a = testing::Gen(24).matrix(3, 4);
  const fs::path csv = temp_path("a.csv");
  const fs::path dmat = temp_path("a.dmat");
  save_matrix(a, csv);
  save_matrix(load_matrix(csv), dmat);
  EXPECT_EQ(load_matrix(dmat), a);
  fs::remove(csv);
  fs::remove(dmat);
}

}  // namespace
}  // namespace dnmf
