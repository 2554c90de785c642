#include "iqaforge/cli.hpp"

int main(int argc, char** argv) { return iqaforge::cli::run(argc, argv); }
