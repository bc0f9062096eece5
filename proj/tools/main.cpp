#include "asq/cli.hpp"

int main(int argc, char** argv) { return asq::run_cli(argc, argv); }
