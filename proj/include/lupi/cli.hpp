#pragma once

#include <memory>

namespace CLI {
class App;
}

namespace lupi::cli {

// Exit codes: 0 success, 2 invalid configuration or arguments, 3 data or I/O
// errors, 4 numeric failure, 1 anything else.
int run(int argc, const char* const* argv);

// App wiring without execution, exposed for the flag-documentation audit.
struct Options;
std::shared_ptr<CLI::App> make_app(std::shared_ptr<Options>& options_out);

}  // namespace lupi::cli
