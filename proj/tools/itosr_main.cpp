#include "commands.hpp"

int main(int argc, char** argv) { return itosr::cli::main_dispatch(argc, argv); }
