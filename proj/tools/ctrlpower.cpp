#include "ctrlpower/commands.hpp"

int main(int argc, char** argv) { return ctrlpower::cli::run(argc, argv); }
