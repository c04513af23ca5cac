#pragma once

// Private to the core library; public headers stay free of nlohmann/json.
#include <json.hpp>
