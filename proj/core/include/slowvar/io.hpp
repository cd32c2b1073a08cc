#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace slowvar {

// Writes through a temporary file in the same directory, then renames it
// over `path`, so readers never see a partial artifact.
void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body,
                  bool binary = false);

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

// Numeric CSV with one header line.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace slowvar
