#include <iostream>

#include "kkl/app.hpp"

int main(int argc, char** argv) { return kkl::run_cli(argc, argv, std::cout, std::cerr); }
