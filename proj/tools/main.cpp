#include "airdyn/cli.hpp"

int main(int argc, char** argv) { return airdyn::cli::run(argc, argv); }
