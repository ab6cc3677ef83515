#include "tua/harness/cli.hpp"

int main(int argc, char** argv) { return tua::harness::run_cli(argc, argv); }
