#include "commands.hpp"

int main(int argc, char** argv) { return geetgdr::cli::run(argc, argv); }
