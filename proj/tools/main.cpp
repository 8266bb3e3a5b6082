#include "hybridspec/cli.hpp"

int main(int argc, char** argv) { return hybridspec::cli::main_entry(argc, argv); }
