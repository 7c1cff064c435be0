// Copyright 2026 The duofm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace duofm {

/// Caps the worker count used by parallel loops. 0 selects the hardware
/// concurrency. Results never depend on the cap: work items write disjoint
/// output slots.
inline std::atomic<int>& thread_cap() {
    static std::atomic<int> cap{0};
    return cap;
}

inline void set_thread_cap(int cap) { thread_cap().store(cap < 0 ? 0 : cap); }

namespace detail {

template <typename Fn>
void parallel_for(long n, Fn&& fn) {
    if (n <= 0) return;
    int workers = thread_cap().load();
    if (workers == 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (static_cast<long>(workers) > n) workers = static_cast<int>(n);
    if (workers <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        try {
            while (true) {
                const long i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace detail
} // namespace duofm
