#include "efcast/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return efcast::run_cli(argc, argv, std::cout, std::cerr); }
