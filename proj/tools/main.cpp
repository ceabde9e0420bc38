#include <iostream>

#include "objsample/cli.hpp"

int main(int argc, char** argv) { return objsample::cli_main(argc, argv, std::cout, std::cerr); }
