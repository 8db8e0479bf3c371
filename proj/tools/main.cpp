#include "cli_app.hpp"

int main(int argc, char** argv) { return plsa::cli::run_cli(argc, argv); }
