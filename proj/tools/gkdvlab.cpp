#include "gkdv/cli.hpp"

int main(int argc, char** argv) { return gkdv::cli::main_entry(argc, argv); }
