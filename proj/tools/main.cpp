#include <cstdio>

int main() {
  std::puts("sepfield: cli under construction");
  return 0;
}
