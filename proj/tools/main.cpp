#include "intentrec/cli.hpp"

int main(int argc, char** argv) { return intentrec::run_cli(argc, argv); }
