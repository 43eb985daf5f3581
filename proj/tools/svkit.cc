// Command-line front end; all logic lives in svkit/cli.hpp.
#include "svkit/cli.hpp"

int main(int argc, char** argv) { return svkit::cli::Run(argc, argv); }
