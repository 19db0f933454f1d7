#include <iostream>

#include "tps/cli.hpp"

int main(int argc, char** argv) { return tps::run_cli(argc, argv, std::cout, std::cerr); }
