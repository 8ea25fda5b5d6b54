#include "qmix/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "qmix/vec.hpp"

namespace qmix {

std::string Vec::str() const
{
    std::string s;
    for (int i = 0; i < dim; ++i) {
        if (i) s += ",";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", c[i]);
        s += buf;
    }
    return s;
}

unsigned worker_count()
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QMIX_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return std::min<unsigned>(static_cast<unsigned>(n), 256u);
    }
    return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body)
{
    if (n == 0) return;
    unsigned nt = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
    if (nt <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        std::size_t b = t * chunk, e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, t, b, e] {
            try {
                body(b, e);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& ep : errs)
        if (ep) std::rethrow_exception(ep);
}

}  // namespace qmix
