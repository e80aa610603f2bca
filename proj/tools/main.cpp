#include "ddsim/cli.hpp"

int main(int argc, char** argv) { return ddsim::run_cli(argc, argv); }
