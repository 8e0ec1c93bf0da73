#include <iostream>

#include "presage/cli.hpp"

int main(int argc, char** argv) {
    return presage::cli::cli_main(argc, argv, std::cout, std::cerr);
}
