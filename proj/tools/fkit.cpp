#include <iostream>
#include <string>
#include <vector>

#include <fkit/cli.hpp>

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return fkit::run_cli(args, std::cout, std::cerr);
}
