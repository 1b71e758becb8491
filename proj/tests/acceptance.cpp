#include <cstdio>
#include <cstdlib>
#include <string>

#include "helmtrace/harness.hpp"

int main(int argc, char** argv) {
    helmtrace::harness::VerifyOptions options;
    if (argc > 1) options.out_dir = argv[1];
    options.on_result = [](const helmtrace::harness::CheckResult& c) {
        std::printf("%s %d %s (%.1f s): %s\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(), c.seconds,
                    c.detail.c_str());
        std::fflush(stdout);
    };
    int failed = 0;
    for (const auto& c : helmtrace::harness::run_verification(options)) failed += c.passed ? 0 : 1;
    std::printf("%d of 8 criteria passed\n", 8 - failed);
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
