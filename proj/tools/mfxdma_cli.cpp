#include "mfxdma/cli.hpp"

int main(int argc, char** argv) { return mfxdma::cli::run(argc, argv); }
