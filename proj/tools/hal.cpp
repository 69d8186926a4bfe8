#include "hal/cli.hpp"

int main(int argc, char** argv) { return hal::cli::run(argc, argv); }
