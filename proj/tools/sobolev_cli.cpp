#include <string>
#include <vector>

#include "sobolev/cli.hpp"

int main(int argc, char** argv) {
    return sobolev::cli::main_entry(std::vector<std::string>(argv + 1, argv + argc));
}
