#include "thirdq/cli.hpp"

int main(int argc, char** argv) { return thirdq::cli::run(argc, argv); }
