#pragma once

#include <string>

namespace survtraj {

// Warnings go to stderr unless quieted (CLI --quiet).
void set_quiet(bool quiet);
bool quiet();
void log_warning(const std::string& msg);

}  // namespace survtraj
