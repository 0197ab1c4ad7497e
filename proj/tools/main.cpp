#include <iostream>

#include "ksblow/cli.hpp"

int main(int argc, char** argv) { return ksblow::run_cli(argc, argv, std::cout, std::cerr); }
