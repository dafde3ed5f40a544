#include "dppg/cli.hpp"

int main(int argc, char** argv) { return dppg::cli::run(argc, argv); }
