#include "cheegerlab/cli.hpp"

int main(int argc, char** argv) { return cheegerlab::cli::run(argc, argv); }
