#include <cstdio>

int main() {
  std::puts("t2kit: no subcommands wired up yet");
  return 2;
}
