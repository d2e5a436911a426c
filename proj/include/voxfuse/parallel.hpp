/*
 * voxfuse : volumetric lesion mask fusion and evaluation
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VOXFUSE_PARALLEL_HPP
#define VOXFUSE_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace voxfuse::detail {

// Splits [0, total) into one contiguous block per worker and runs
// fn(begin, end) on each. Workers write disjoint ranges, so results
// are identical for every worker count.
template <class Fn>
void parallel_blocks(std::size_t total, unsigned workers, Fn&& fn) {
    workers = std::max(1u, workers);
    if (workers == 1 || total < 2) {
        fn(std::size_t{0}, total);
        return;
    }
    workers = static_cast<unsigned>(
        std::min<std::size_t>(workers, total));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    const std::size_t chunk = (total + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
        const std::size_t begin = std::min(total, t * chunk);
        const std::size_t end = std::min(total, begin + chunk);
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                if (!failed.exchange(true))
                    first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

/// Worker count for a data-parallel pass over `voxels` elements.
/// Small grids stay single-threaded; large ones use the machine.
inline unsigned auto_workers(std::size_t voxels) {
    if (voxels < (std::size_t{1} << 20))
        return 1;
    const unsigned hw = std::thread::hardware_concurrency();
    return std::clamp(hw, 1u, 8u);
}

} // namespace voxfuse::detail

#endif
