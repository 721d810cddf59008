#include "rdanon_cli.hpp"

int main(int argc, char** argv) { return rdanon::cli::run(argc, argv); }
