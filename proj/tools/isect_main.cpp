#include "isect/cli.hpp"

int main(int argc, char** argv) { return isect::cli::run(argc, argv); }
