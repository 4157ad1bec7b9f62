#include <iostream>

#include "healthshock/cli.hpp"

int main(int argc, char** argv) { return healthshock::run_cli(argc, argv, std::cout, std::cerr); }
