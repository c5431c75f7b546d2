#include <iostream>

#include "lrot/cli.hpp"

int main(int argc, char** argv) { return lrot::RunCli(argc, argv, std::cout, std::cerr); }
