#ifndef RANDNET_IO_HPP
#define RANDNET_IO_HPP

#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "randnet/core.hpp"

namespace randnet {

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return hex64(fnv1a(buf.str()));
}

// nlohmann::json keeps object keys sorted, so dump() is canonical.
inline std::string spec_hash(const nlohmann::json& spec) { return hex64(fnv1a(spec.dump())); }

// CSV file whose first line is "# spec_hash=<hash>"; body writes header and rows.
inline void write_csv(const std::string& path, const std::string& hash, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << "# spec_hash=" << hash << '\n';
  body(out);
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + path + "'");
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, "'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace randnet

#endif  // RANDNET_IO_HPP
