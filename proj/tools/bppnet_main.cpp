#include "bppnet/cli.hpp"

int main(int argc, char** argv) {
    return bppnet::run_cli(argc, argv);
}
