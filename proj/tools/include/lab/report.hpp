#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lab/experiment.hpp"

namespace lab {

using Json = nlohmann::json;  // std::map backed, so keys come out sorted

std::string format_number(double v);  // %.17g
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);
std::string dump(const Json& j);

// Config hash and the constants S_n, c_1, c_2, c3_estimate.
Json report_header(const ExperimentConfig& cfg, const std::string& command);

std::uint64_t fnv1a(const std::string& s);

void atomic_write(const std::string& path, const std::string& contents);

}  // namespace lab
