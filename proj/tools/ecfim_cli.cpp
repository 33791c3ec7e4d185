#include <string>
#include <vector>

#include "ecfim/cli.hpp"

int main(int argc, char** argv) {
    return ecfim::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
