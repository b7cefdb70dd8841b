#include "circlebif/cli.hpp"

int main(int argc, char** argv) { return circlebif::cli::run(argc, argv); }
