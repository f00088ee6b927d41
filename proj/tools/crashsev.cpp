#include <iostream>

#include "crashsev/cli.hpp"

int main(int argc, char** argv) {
    return crashsev::cli::main_entry(argc, argv, std::cout, std::cerr);
}
