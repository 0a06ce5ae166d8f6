#pragma once

#include <string_view>

namespace imprint {

// Sampling policy is keyed on the kind of work a prompt asks for.
enum class TaskKind { creative, analytical, critical };

std::string_view to_string(TaskKind kind);
// Throws UsageError for anything outside the closed set.
TaskKind parse_task_kind(std::string_view name);

}  // namespace imprint
