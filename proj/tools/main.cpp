#include "toolsim/cli.hpp"

int main(int argc, char** argv) {
  return toolsim::cli::dispatch(argc, argv);
}
