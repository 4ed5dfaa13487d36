#include "cli_app.hpp"

int main(int argc, char** argv) { return esdelay::cli::run(argc, argv); }
