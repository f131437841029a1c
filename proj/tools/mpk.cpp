#include "orchestrator/cli.hpp"

int main(int argc, char** argv) { return mpk::cli::run(argc, argv); }
