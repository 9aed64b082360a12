#pragma once

#include "mixture.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace deflab {

//! Shortest-safe decimal for exact double round trips (17 significant digits).
inline std::string
format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

//! {"components": [{"log_weight": r, "mean": r, "std": r}, ...]}
inline std::string
mixture_to_json(const MixtureDensity& mix)
{
  std::ostringstream os;
  os << "{\"components\": [";
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const auto& c = mix[i];
    os << (i ? ", " : "") << "{\"log_weight\": " << format_double(c.log_weight)
       << ", \"mean\": " << format_double(c.mean)
       << ", \"std\": " << format_double(c.std) << "}";
  }
  os << "]}";
  return os.str();
}

inline MixtureDensity
mixture_from_json(const nlohmann::json& j)
{
  if (!j.is_object() || !j.contains("components") ||
      !j.at("components").is_array())
    throw std::invalid_argument("mixture JSON: expected {\"components\": [...]}");
  std::vector<GaussianComponent> comps;
  for (const auto& c : j.at("components")) {
    comps.push_back({ c.at("log_weight").get<double>(),
                      c.at("mean").get<double>(),
                      c.at("std").get<double>() });
  }
  return MixtureDensity(std::move(comps));
}

inline MixtureDensity
mixture_from_json(const std::string& text)
{
  return mixture_from_json(nlohmann::json::parse(text));
}

//! Writes through a temporary file and renames it into place, so readers
//! never observe a partial file.
inline void
write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out)
      throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw std::runtime_error("cannot move " + tmp.string() + " to " +
                             path.string() + ": " + ec.message());
}

inline std::string
read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace deflab
