#include "galstab/cli.hpp"

int main(int argc, char** argv) { return galstab::cli::main(argc, argv); }
