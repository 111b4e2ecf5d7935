#include "sforge/cli.hpp"

int main(int argc, char** argv) { return sforge::cli_main(argc, argv); }
