#include <cstdio>

int main() {
  std::puts("nodec CLI placeholder");
  return 0;
}
