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

// DMAT1 binary matrix format:
//
//   offset  size  field
//   0       4     magic "DMAT"
//   4       4     version, u32 little-endian (= 1)
//   8       8     rows, u64 little-endian
//   16      8     cols, u64 little-endian
//   24      8*rows*cols  IEEE-754 binary64 little-endian, column-major
//
// CSV: one matrix row per line, comma separated.

#ifndef DNMF_MATRIX_IO_HPP_
#define DNMF_MATRIX_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "dnmf/matrix.hpp"

namespace dnmf {

inline constexpr std::uint32_t kDmatVersion = 1;
inline constexpr std::size_t kDmatHeaderBytes = 24;

std::size_t dmat_encoded_size(const Matrix& m);
void encode_dmat(const Matrix& m, std::vector<std::uint8_t>& out);
std::vector<std::uint8_t> encode_dmat(const Matrix& m);
// Throws IoError on bad magic, unsupported version, truncated body,
// trailing bytes, or non-finite values.
Matrix decode_dmat(std::span<const std::uint8_t> bytes);

void write_dmat(const Matrix& m, std::ostream& os);
Matrix read_dmat(std::istream& is);
void save_dmat(const Matrix& m, const std::filesystem::path& path);
Matrix load_dmat(const std::filesystem::path& path);

void write_csv(const Matrix& m, std::ostream& os);
Matrix read_csv(std::istream& is);
void save_csv(const Matrix& m, const std::filesystem::path& path);
Matrix load_csv(const std::filesystem::path& path);

// Dispatches on extension: ".csv" is CSV, anything else DMAT1.
Matrix load_matrix(const std::filesystem::path& path);
void save_matrix(const Matrix& m, const std::filesystem::path& path);

// Little-endian scalar helpers shared with the wire protocol.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
std::uint32_t get_u32(const std::uint8_t* p);
std::uint64_t get_u64(const std::uint8_t* p);

}  // namespace dnmf

#endif  // DNMF_MATRIX_IO_HPP_
