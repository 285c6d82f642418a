#pragma once

#include <json.hpp>

namespace apsynth {
using Json = nlohmann::ordered_json;
}
