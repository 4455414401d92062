#include <iostream>

#include "qrshape/cli.hpp"

int main(int argc, char** argv) { return qrshape::run_cli(argc, argv, std::cout, std::cerr); }
