// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace auggen {

/// Whole file as bytes. Throws auggen::Error on I/O failure.
std::string read_file(const std::filesystem::path& path);

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal text that round-trips the double ("inf", "-inf" for infinities).
std::string format_real(double value);

/// Hex digest of fnv1a64 over `bytes`, zero-padded to 16 digits.
std::string hex_digest(std::string_view bytes);

/// Minimal RFC 4180 CSV builder. Fields containing separators or quotes are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(unsigned long long value);
  CsvWriter& field(std::size_t value) { return field(static_cast<unsigned long long>(value)); }
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(bool value) { return field(std::string_view(value ? "true" : "false")); }
  CsvWriter& field(const char* text) { return field(std::string_view(text)); }
  CsvWriter& field(const std::string& text) { return field(std::string_view(text)); }

  /// Ends the current row. Throws if the field count differs from the header.
  void end_row();

  const std::string& str() const noexcept { return buffer_; }

 private:
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string buffer_;
};

/// Parses CSV text with a header row into rows of fields (header excluded).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

}  // namespace auggen
