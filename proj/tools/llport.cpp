#include "llport/cli.hpp"

int main(int argc, char** argv) { return llport::run_cli(argc, argv); }
