#include <string>
#include <vector>

#include "pbpm_cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return pbpm::cli::run_command(args);
}
