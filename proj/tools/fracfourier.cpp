#include "fracfourier/cli.hpp"

int main(int argc, char** argv) { return fracfourier::cli::main(argc, argv); }
