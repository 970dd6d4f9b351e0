#pragma once

// nlohmann-based helpers shared by json_io.cpp and verifysuite.cpp.

#include <string>

#include <json.hpp>

#include "lchern/json_io.hpp"

namespace lchern::detail {

using Json = nlohmann::json;

Json parse_json(const std::string& text, const std::string& what);
CMat matrix_from(const Json& j);
Json matrix_to(const CMat& m);
GeneratedFamily family_from(const Json& j, const std::string& base_dir);
Json report_to(const CheckReport& report);
Json form_value_to(const FormValue& value);

double get_double(const Json& j, const char* key, double fallback);
int get_int(const Json& j, const char* key, int fallback);
const Json& require(const Json& j, const char* key, const std::string& context);

}  // namespace lchern::detail
