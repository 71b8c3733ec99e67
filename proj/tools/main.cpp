#include "pcpg/cli.hpp"

int main(int argc, char** argv) { return pcpg::run_cli(argc, argv); }
