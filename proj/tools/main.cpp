#include "sstht/cli.hpp"

int main(int argc, char** argv) { return sstht::cli::main(argc, argv); }
