#include "rmtl/cli.hpp"

int main(int argc, char** argv) { return rmtl::cli::run_command(argc, argv); }
