#pragma once

// Little-endian binary streams for the device and trace file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "asyt/errors.hpp"
#include "asyt/netcore.hpp"

namespace asyt {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

class BinaryWriter {
 public:
  void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof v);
  }
  /// Matrix entries in row-major order as float32.
  template <typename Derived>
  void put_f32(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put(static_cast<float>(m(r, c)));
  }
  const std::vector<char>& bytes() const { return buf_; }

  /// Write-temp-then-rename so readers never observe a partial file.
  void commit(const std::filesystem::path& path) const {
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write " + tmp);
      out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      if (!out) throw IoError("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  std::vector<char> buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path_);
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::string_view(buf_.data() + at_, m.size()) != m)
      throw FormatError(path_ + ": bad magic (expected " + std::string(m) + ")");
    at_ += m.size();
  }
  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + at_, sizeof v);
    at_ += sizeof v;
    return v;
  }
  template <typename Scalar>
  Matrix<Scalar> get_f32(Eigen::Index rows, Eigen::Index cols) {
    Matrix<Scalar> m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(get<float>());
    return m;
  }
  bool at_end() const { return at_ == buf_.size(); }
  const std::string& path() const { return path_; }

 private:
  void need(std::size_t n) const {
    if (at_ + n > buf_.size()) throw IoError(path_ + ": truncated file");
  }
  std::string path_;
  std::vector<char> buf_;
  std::size_t at_ = 0;
};

}  // namespace asyt
