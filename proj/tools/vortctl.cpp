#include "cli.hpp"

int main(int argc, char** argv) { return vortctl::cli::main(argc, argv); }
