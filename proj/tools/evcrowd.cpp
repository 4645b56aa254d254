#include "evcrowd/cli.hpp"

int main(int argc, char** argv) { return evcrowd::cli::run(argc, argv); }
