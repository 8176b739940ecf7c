#include "robustlab/cli.hpp"

int main(int argc, char** argv) { return robustlab::cli::run(argc, argv); }
