#pragma once

#include <string_view>

namespace neolus {

enum class Task { Regression, Classification };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);  // ConfigError on unknown names

}  // namespace neolus
