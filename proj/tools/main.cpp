#include "cli/cli.hpp"

int main(int argc, char** argv) { return pulsecancel::cli::dispatch(argc, argv); }
