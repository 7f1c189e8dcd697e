#pragma once

#include <string>

#include <json.hpp>

#include "ymgen/measures.hpp"

namespace ymgen {

using json = nlohmann::json;

json to_json(const StatePoint& w);
StatePoint state_from_json(const json& j, int d);

json to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const json& atoms, int d);

json to_json(const GeneralizedYM& ym);
GeneralizedYM ym_from_json(const json& j);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// FNV-1a over the canonical dump.
std::string content_hash(const json& j);

}  // namespace ymgen
