#include <cstdio>

int main() {
  std::puts("pivotcap: subcommands not wired up yet");
  return 2;
}
