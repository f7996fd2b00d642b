#include "cli.hpp"

int main(int argc, char** argv) { return ddlab::cli::cli_main(argc, argv); }
