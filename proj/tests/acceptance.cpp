// Runs the demo scenarios for criteria 1-11 and the mutation check for criterion 12.
// Prints one line per criterion; exits non-zero if any criterion fails.
#include <chrono>
#include <cstdio>
#include <string>

#include "ldx/demo.hpp"

using namespace ldx;

int main() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (const auto& r : demo::demo_suite()) {
        bool in_time = r.seconds < r.budget;
        bool pass = r.pass && in_time;
        std::printf("criterion %2d  %-14s %s  (%.2fs of %.0fs)\n", r.criterion, r.name.c_str(), pass ? "PASS" : "FAIL",
                    r.seconds, r.budget);
        for (const auto& c : r.checks)
            if (!c.pass) std::printf("    failed: %s  value %.3e  limit %.3e\n", c.name.c_str(), c.value, c.limit);
        if (!r.error.empty()) std::printf("    error: %s\n", r.error.c_str());
        if (!in_time) std::printf("    over the time budget\n");
        ok = ok && pass;
    }
    std::string missed;
    for (auto site : mutation::all)
        if (demo::suite_passes_under(site)) missed += " " + std::string(mutation::name(site));
    double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool caught = missed.empty() && total < 300;
    std::printf("criterion 12  %-14s %s  (%.2fs of 300s)%s\n", "mutations", caught ? "PASS" : "FAIL", total,
                missed.empty() ? "" : ("  survived:" + missed).c_str());
    ok = ok && caught;
    return ok ? 0 : 1;
}
