#include "uwsim/harness.hpp"

int main(int argc, char** argv) { return uwsim::run_cli(argc, argv); }
