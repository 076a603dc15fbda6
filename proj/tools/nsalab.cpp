#include "nsalab/cli.hpp"

int main(int argc, char** argv) { return nsalab::cli::run(argc, argv); }
