#include "slowvar/io.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "slowvar/errors.hpp"

namespace slowvar {

void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body, bool binary) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingPrerequisite("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(std::string_view(buf, std::size_t(in.gcount())), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ConfigError("CSV column '" + name + "' not found");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingPrerequisite("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(t.header.size());
    const char* p = line.c_str();
    char* end = nullptr;
    for (;;) {
      row.push_back(std::strtod(p, &end));
      if (end == p) throw ConfigError("non-numeric CSV cell in " + path.string());
      if (*end != ',') break;
      p = end + 1;
    }
    if (row.size() != t.header.size()) throw ConfigError("ragged CSV row in " + path.string());
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace slowvar
