#pragma once

#include "momentsos/cli.hpp"

#include "json.hpp"

#include <iosfwd>
#include <string>

namespace momentsos::cli {

inline constexpr int kReportVersion = 1;

/// Nine significant digits; infinities and NaN spelled out.
std::string human(double v);

/// Full precision; non-finite values become the strings "inf", "-inf" and "nan".
nlohmann::json number(double v);

nlohmann::json to_json(const RankReport& r);
nlohmann::json to_json(const AtomicMeasure& m);
nlohmann::json to_json(const LevelResult& level);
nlohmann::json to_json(const BoundEntry& e);
nlohmann::json to_json(const SuperResolutionResult& r);
nlohmann::json to_json(const SosMembership& m);

void print(std::ostream& out, const RankReport& r);
void print(std::ostream& out, const AtomicMeasure& m, const std::vector<std::string>& variables);
void print(std::ostream& out, const LevelResult& level, const std::vector<std::string>& variables);
void print(std::ostream& out, const BoundEntry& e, const std::vector<std::string>& variables);
void print(std::ostream& out, const SuperResolutionResult& r, const std::vector<std::string>& variables);
void print(std::ostream& out, const SosMembership& m);

}  // namespace momentsos::cli
