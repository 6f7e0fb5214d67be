#include <iostream>

#include "faae/cli.hpp"

int main(int argc, char** argv) { return faae::run_cli(argc, argv, std::cout, std::cerr); }
