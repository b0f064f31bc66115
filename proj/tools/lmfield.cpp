#include "cli_app.hpp"

int main(int argc, char** argv) { return lmf::cli::run(argc, argv); }
