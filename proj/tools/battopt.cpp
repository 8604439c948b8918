#include "battopt/cli.hpp"

int main(int argc, char** argv) { return battopt::run_cli(argc, argv); }
