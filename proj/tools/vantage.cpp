#include <iostream>

#include "vantage/cli.hpp"

int main(int argc, char** argv) { return vantage::run_cli(argc, argv, std::cout, std::cerr); }
