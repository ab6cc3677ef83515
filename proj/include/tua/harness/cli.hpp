#pragma once

namespace tua::harness {

// Exit status: 0 success, 1 runtime/config failure, 2 usage error.
int run_cli(int argc, char** argv);

}  // namespace tua::harness
