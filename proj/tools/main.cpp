#include "cli.hpp"

int main(int argc, char** argv) { return clsna::cli::main(argc, argv); }
