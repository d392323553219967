#include <artjudge/cli.hpp>

int main(int argc, char** argv) { return artjudge::cli_dispatch(argc, argv); }
