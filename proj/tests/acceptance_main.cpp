#include <cstdio>
#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

#include "chemoscale/acceptance.hpp"

int main(int argc, char** argv) {
    using namespace chemoscale;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);
    int failed = 0;
    for (int id = 1; id <= kCriterionCount; ++id) {
        if (only && id != only) continue;
        const auto r = run_criterion(id, workers);
        std::printf("%s\n", format_result(r).c_str());
        std::fflush(stdout);
        if (!r.pass) ++failed;
    }
    std::printf("%d of %d criteria failed\n", failed, only ? 1 : kCriterionCount);
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
