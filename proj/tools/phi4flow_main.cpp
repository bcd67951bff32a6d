#include "phi4flow/cli.hpp"

int main(int argc, char** argv) { return phi4flow::cli::run(argc, argv); }
