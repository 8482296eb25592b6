#include <iostream>

#include "excursion/cli.hpp"

int main(int argc, char** argv) { return excursion::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
