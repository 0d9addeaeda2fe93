#include <iostream>

#include "ntrojan_cli/cli.hpp"

int main(int argc, char** argv) { return ntrojan::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
