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

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "dnmf/error.hpp"

namespace dnmf {

static_assert(std::endian::native == std::endian::little,
              "DMAT1 encoding assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'M', 'A', 'T'};

}  // namespace

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int b = 3; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

std::size_t dmat_encoded_size(const Matrix& m) {
  return kDmatHeaderBytes + m.size() * sizeof(double);
}

void encode_dmat(const Matrix& m, std::vector<std::uint8_t>& out) {
  out.reserve(out.size() + dmat_encoded_size(m));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, kDmatVersion);
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  const auto* raw = reinterpret_cast<const std::uint8_t*>(m.data());
  out.insert(out.end(), raw, raw + m.size() * sizeof(double));
}

std::vector<std::uint8_t> encode_dmat(const Matrix& m) {
  std::vector<std::uint8_t> out;
  encode_dmat(m, out);
  return out;
}

Matrix decode_dmat(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kDmatHeaderBytes) {
    throw IoError("DMAT1: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("DMAT1: bad magic");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kDmatVersion) {
    throw IoError("DMAT1: unsupported version " + std::to_string(version));
  }
  const std::uint64_t rows = get_u64(bytes.data() + 8);
  const std::uint64_t cols = get_u64(bytes.data() + 16);
  const std::uint64_t body = bytes.size() - kDmatHeaderBytes;
  if (cols != 0 && rows > std::numeric_limits<std::uint64_t>::max() / 8 / cols) {
    throw IoError("DMAT1: dimensions overflow");
  }
  if (rows * cols * sizeof(double) != body) {
    throw IoError("DMAT1: body has " + std::to_string(body) + " bytes, expected " +
                  std::to_string(rows * cols * sizeof(double)));
  }
  std::vector<double> data(rows * cols);
  std::memcpy(data.data(), bytes.data() + kDmatHeaderBytes, body);
  Matrix m(rows, cols, std::move(data));
  if (!m.all_finite()) throw IoError("DMAT1: non-finite entry");
  return m;
}

void write_dmat(const Matrix& m, std::ostream& os) {
  const auto bytes = encode_dmat(m);
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("DMAT1: write failed");
}

Matrix read_dmat(std::istream& is) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return decode_dmat(bytes);
}

void save_dmat(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_dmat(m, os);
}

Matrix load_dmat(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_dmat(is);
}

void write_csv(const Matrix& m, std::ostream& os) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
  if (!os) throw IoError("CSV: write failed");
}

Matrix read_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      if (b == std::string::npos) {
        throw IoError("CSV line " + std::to_string(lineno) + ": empty field");
      }
      field = field.substr(b, e - b + 1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw IoError("CSV line " + std::to_string(lineno) + ": cannot parse '" + field + "'");
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError("CSV line " + std::to_string(lineno) + ": expected " +
                    std::to_string(rows.front().size()) + " fields, got " +
                    std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("CSV: no data");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  if (!m.all_finite()) throw IoError("CSV: non-finite entry");
  return m;
}

void save_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(m, os);
}

Matrix load_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return read_csv(is);
}

Matrix load_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? load_csv(path) : load_dmat(path);
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    save_csv(m, path);
  } else {
    save_dmat(m, path);
  }
}

}  // namespace dnmf
