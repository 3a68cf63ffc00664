#include <smoothctl/cli.hpp>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return smoothctl::cli_dispatch(args);
}
