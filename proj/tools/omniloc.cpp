#include "omniloc/cli.hpp"

int main(int argc, char** argv) { return omniloc::run_cli(argc, argv); }
