#include "tbvar/cli.hpp"

int main(int argc, char** argv) { return tbvar::cli::run(argc, argv); }
