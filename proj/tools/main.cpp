#include "pixswap/cli.hpp"

int main(int argc, char** argv) { return pixswap::run_cli(argc, argv); }
