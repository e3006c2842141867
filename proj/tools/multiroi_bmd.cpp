#include "multiroi/cli.hpp"

int main(int argc, char** argv) { return multiroi::run_cli(argc, argv); }
