#include "izsfd/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return izsfd::run_cli(argc, argv, std::cout, std::cerr); }
