#include "ratvol/cli.hpp"

int main(int argc, char** argv) { return ratvol::run_cli(argc, argv); }
