#include <iostream>

#include "tqa/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return tqa::run_cli(args, std::cout, std::cerr);
}
