#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hal::cli {

/// `args` excludes the program name. Returns 0 on success, 1 on usage or
/// validation errors, 2 on I/O errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace hal::cli
