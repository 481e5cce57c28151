#include "infosample/cli.hpp"

int main(int argc, char** argv) { return infosample::run_cli(argc, argv); }
