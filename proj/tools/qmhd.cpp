#include "qmhd/cli.hpp"

int main(int argc, char** argv) { return qmhd::run_cli(argc, argv); }
