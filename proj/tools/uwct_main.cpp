#include "uwct/cli.hpp"

int main(int argc, char** argv) { return uwct::run_cli(argc, argv); }
