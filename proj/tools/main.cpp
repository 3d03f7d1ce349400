#include "gaitnet/cli.hpp"

int main(int argc, char** argv) { return gaitnet::cli::run(argc, argv); }
