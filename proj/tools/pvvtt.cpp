#include <iostream>

#include "pvvtt/cli/commands.hpp"

int main(int argc, char** argv) { return pvvtt::run_cli(argc, argv, std::cout, std::cerr); }
