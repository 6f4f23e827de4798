#include "mgal/cli.hpp"

int main(int argc, char** argv) { return mgal::cli::run(argc, argv); }
