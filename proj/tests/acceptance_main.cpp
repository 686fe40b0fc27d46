// Runs every acceptance criterion and prints one line per criterion.

#include <iostream>

#include "nsl/acceptance.hpp"

int main() {
  int failed = 0;
  for (int id : nsl::criterion_ids()) {
    auto r = nsl::run_criterion(id);
    nsl::print_result(std::cout, r);
    std::cout.flush();
    if (!r.pass) ++failed;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " of " << nsl::criterion_ids().size()
            << " criteria failing\n";
  return failed ? 1 : 0;
}
