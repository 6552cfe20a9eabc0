#include <iostream>
#include <string>
#include <vector>

#include "biouncert/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return biouncert::cli::run_cli(args, std::cout, std::cerr);
}
