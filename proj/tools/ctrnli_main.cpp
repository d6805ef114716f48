#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "ctrnli/cli.hpp"

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) {
  g_interrupted = true;
  // A second Ctrl-C terminates immediately.
  std::signal(SIGINT, SIG_DFL);
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);
  std::vector<std::string> args(argv + 1, argv + argc);
  return ctrnli::cli::run_cli(args, std::cout, std::cerr, &g_interrupted);
}
