#include "cellsynth/cli.hpp"

int main(int argc, char** argv) { return cellsynth::cli_main(argc, argv); }
