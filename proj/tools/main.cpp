#include "betaforest/cli.hpp"

int main(int argc, char** argv) {
  return betaforest::cli_dispatch(argc, argv);
}
