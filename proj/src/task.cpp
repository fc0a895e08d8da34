#include "neolus/task.hpp"

#include <string>

#include "neolus/error.hpp"

namespace neolus {

std::string_view to_string(Task t) { return t == Task::Regression ? "regression" : "classification"; }

Task parse_task(std::string_view s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::Classification;
  throw ConfigError("unknown task '" + std::string(s) + "'");
}

}  // namespace neolus
