#include "qecclab/cli.hpp"

int main(int argc, char** argv) { return qecclab::cli::dispatch(argc, argv); }
