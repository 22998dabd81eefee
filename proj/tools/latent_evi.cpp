#include "latent_evi/cli.hpp"

int main(int argc, char** argv) { return latent_evi::cli::run(argc, argv); }
