#include "lab/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "paneitz/bubbles.hpp"
#include "paneitz/error.hpp"
#include "paneitz/functional.hpp"

namespace lab {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string s;
  for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
  s += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_number(r[i]);
    s += '\n';
  }
  return s;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Json report_header(const ExperimentConfig& cfg, const std::string& command) {
  const auto& bc = paneitz::bubble_constants(cfg.n);
  const auto& c3 = paneitz::calibrate_c3(cfg.n);
  Json h;
  h["command"] = command;
  h["config_hash"] = config_hash(cfg);
  h["config"] = to_ini(cfg);
  h["constants"] = {{"S_n", bc.S_n}, {"c_1", bc.c_1}, {"c_2", bc.c_2}, {"c3_estimate", c3.value}, {"n", cfg.n}};
  return h;
}

void atomic_write(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw paneitz::ConfigurationError("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw paneitz::ConfigurationError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

}  // namespace lab
