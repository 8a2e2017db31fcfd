#include <torch/torch.h>

#include "aparecium/cli/commands.hpp"

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  std::vector<std::string> args(argv + 1, argv + argc);
  return aparecium::cli::run_cli(args);
}
