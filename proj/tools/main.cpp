#include "cli.hpp"

#include <csignal>
#include <iostream>

namespace {

extern "C" void on_sigint(int) { qevo::cli::stop_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_sigint);
    std::vector<std::string> args(argv + 1, argv + argc);
    return qevo::cli::run(args, std::cout, std::cerr);
}
