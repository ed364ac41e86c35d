#include <string>
#include <vector>

#include "tsar/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tsar::run_cli(args);
}
