#include <iostream>

#include "estlab/cli.hpp"

int main(int argc, char** argv)
{
    return estlab::cli::run(argc, argv, std::cout, std::cerr);
}
