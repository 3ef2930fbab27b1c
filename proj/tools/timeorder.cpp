#include "timeorder/cli.hpp"

int main(int argc, char** argv) { return timeorder::run_cli(argc, argv); }
