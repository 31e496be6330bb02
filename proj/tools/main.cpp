#include "envariance/cli.hpp"

int main(int argc, char** argv) { return envariance::cli::run(argc, argv); }
