#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace aparecium::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kMissingArtifact = 2, kInternal = 3 };

/// Entry point of the `aparecium` command: train, embed, extract, locate,
/// evaluate, synth-data.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace aparecium::cli
