#include "dirspeech/cli.hpp"

int main(int argc, char** argv) { return dirspeech::run_cli(argc, argv); }
