#include <iostream>

#include "sctx/cli.hpp"

int main(int argc, char** argv) { return sctx::run_cli(argc, argv, std::cout, std::cerr); }
