#include "infoplan/cli.hpp"

int main(int argc, char** argv) { return infoplan::run_cli(argc, argv); }
