#include "prodlm/cli.hpp"

int main(int argc, char** argv) { return prodlm::cli::run(argc, argv); }
