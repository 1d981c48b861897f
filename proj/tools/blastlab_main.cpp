#include "blastlab/cli.hpp"

int main(int argc, char** argv) { return blastlab::cli::run(argc, argv); }
