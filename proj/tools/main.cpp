#include "maupertuis/cli.hpp"

int main(int argc, char** argv) { return maupertuis::cli::run(argc, argv); }
