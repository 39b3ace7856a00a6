#include "cadkit/cli/cli.hpp"

int main(int argc, char** argv) { return cadkit::cli::run(argc, argv); }
