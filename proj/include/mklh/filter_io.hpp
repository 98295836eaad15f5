#pragma once

// Filter files. JSON by default: {"a": [9 numbers, row-major], "s": [3 numbers]}
// written with 17 significant digits. Paths ending in ".mklf" use the raw
// form: 12 little-endian IEEE-754 doubles in the same order.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mklh/error.hpp"
#include "mklh/transport.hpp"

namespace mklh {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for '" + path.string() + "'");
}

inline bool is_binary_filter_path(const std::filesystem::path& path) { return path.extension() == ".mklf"; }

template <std::size_t N>
std::array<double, N> json_numbers(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::ParseError, where + ": missing \"" + key + "\"");
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != N)
    throw Error(Errc::ParseError, where + ": \"" + key + "\" must hold " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!arr[i].is_number()) throw Error(Errc::ParseError, where + ": non-numeric entry in \"" + key + "\"");
    out[i] = arr[i].get<double>();
    if (!std::isfinite(out[i])) throw Error(Errc::ParseError, where + ": non-finite entry in \"" + key + "\"");
  }
  return out;
}

}  // namespace detail

/// JSON text for one filter, numbers printed with 17 significant digits.
inline std::string filter_to_json(const MklFilter& f) {
  if (!f.is_finite()) throw Error(Errc::NonFinite, "filter has non-finite parameters");
  const auto p = f.params();
  std::string out = "{\"a\": [";
  for (std::size_t i = 0; i < 9; ++i) out += (i ? ", " : "") + detail::format_double(p[i]);
  out += "], \"s\": [";
  for (std::size_t i = 9; i < 12; ++i) out += (i > 9 ? ", " : "") + detail::format_double(p[i]);
  out += "]}";
  return out;
}

inline MklFilter filter_from_json(const nlohmann::json& j, const std::string& where = "filter") {
  const auto a = detail::json_numbers<9>(j, "a", where);
  const auto s = detail::json_numbers<3>(j, "s", where);
  MklFilter f;
  f.a.m = a;
  f.s = {s[0], s[1], s[2]};
  return f;
}

inline MklFilter filter_from_json_text(const std::string& text, const std::string& where = "filter") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, where + ": " + e.what());
  }
  return filter_from_json(j, where);
}

inline std::vector<unsigned char> filter_to_binary(const MklFilter& f) {
  if (!f.is_finite()) throw Error(Errc::NonFinite, "filter has non-finite parameters");
  std::vector<unsigned char> out(12 * 8);
  const auto p = f.params();
  for (std::size_t i = 0; i < 12; ++i) {
    auto bits = std::bit_cast<std::uint64_t>(p[i]);
    for (std::size_t b = 0; b < 8; ++b) out[8 * i + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

inline MklFilter filter_from_binary(std::span<const unsigned char> bytes, const std::string& where = "filter") {
  if (bytes.size() != 12 * 8)
    throw Error(Errc::ParseError, where + ": expected 96 bytes, got " + std::to_string(bytes.size()));
  std::array<double, 12> p{};
  for (std::size_t i = 0; i < 12; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    p[i] = std::bit_cast<double>(bits);
    if (!std::isfinite(p[i])) throw Error(Errc::ParseError, where + ": non-finite parameter");
  }
  return MklFilter::from_params(p);
}

inline void save_filter(const MklFilter& f, const std::filesystem::path& path) {
  if (detail::is_binary_filter_path(path)) {
    const auto bytes = filter_to_binary(f);
    detail::write_text_file(path, std::string(bytes.begin(), bytes.end()));
  } else {
    detail::write_text_file(path, filter_to_json(f) + "\n");
  }
}

inline MklFilter load_filter(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  if (detail::is_binary_filter_path(path))
    return filter_from_binary(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()),
                              path.string());
  return filter_from_json_text(text, path.string());
}

/// Filter sequences (one entry per frame) are a JSON array of filter objects.
inline std::vector<MklFilter> load_filter_sequence(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(Errc::ParseError, path.string() + ": expected a JSON array of filters");
  std::vector<MklFilter> seq;
  for (std::size_t i = 0; i < j.size(); ++i)
    seq.push_back(filter_from_json(j[i], path.string() + "[" + std::to_string(i) + "]"));
  return seq;
}

inline void save_filter_sequence(std::span<const MklFilter> seq, const std::filesystem::path& path) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < seq.size(); ++i) out += "  " + filter_to_json(seq[i]) + (i + 1 < seq.size() ? ",\n" : "\n");
  out += "]\n";
  detail::write_text_file(path, out);
}

}  // namespace mklh
