#include "pvd/threads.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace pvd {

namespace {

int resolve_thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("PVD_THREADS")) {
        long requested = std::strtol(env, nullptr, 10);
        if (requested >= 1 && requested < static_cast<long>(hw)) return static_cast<int>(requested);
        if (requested >= static_cast<long>(hw)) return static_cast<int>(hw);
    }
    return static_cast<int>(hw);
}

// Persistent pool dispatching many sub-millisecond kernels per iteration:
// workers spin briefly before sleeping so back-to-back dispatches skip the
// futex round trip.
class Pool {
public:
    explicit Pool(int workers) {
        for (int i = 1; i < workers; ++i) {
            threads_.emplace_back([this, i] { worker_loop(i); });
        }
    }

    ~Pool() {
        stop_.store(true, std::memory_order_release);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++generation_notify_;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    int width() const { return static_cast<int>(threads_.size()) + 1; }

    void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
        const int chunks = width();
        task_ = &fn;
        task_n_ = n;
        pending_.store(chunks - 1, std::memory_order_relaxed);
        generation_.fetch_add(1, std::memory_order_release);
        if (sleepers_.load(std::memory_order_acquire) > 0) {
            {
                std::lock_guard<std::mutex> lock(mutex_);
                ++generation_notify_;
            }
            cv_.notify_all();
        }
        run_chunk(0, chunks, n, fn);
        // Workers typically finish within the caller's own chunk time; spin
        // first, sched_yield stalls for a scheduler quantum on some hosts.
        for (long spin = 0; pending_.load(std::memory_order_acquire) != 0; ++spin) {
            if (spin > 2000000) {
                std::this_thread::yield();
            }
#if defined(__x86_64__) || defined(__i386__)
            __builtin_ia32_pause();
#endif
        }
    }

private:
    static void run_chunk(int chunk, int chunks, std::size_t n,
                          const std::function<void(std::size_t, std::size_t)>& fn) {
        const std::size_t lo = n * static_cast<std::size_t>(chunk) / chunks;
        const std::size_t hi = n * static_cast<std::size_t>(chunk + 1) / chunks;
        if (lo < hi) fn(lo, hi);
    }

    void worker_loop(int chunk) {
        std::uint64_t seen = 0;
        for (;;) {
            // Spin window tuned for dispatch gaps well under a millisecond.
            bool got_work = false;
            for (int spin = 0; spin < 20000; ++spin) {
                if (stop_.load(std::memory_order_acquire)) return;
                if (generation_.load(std::memory_order_acquire) != seen) {
                    got_work = true;
                    break;
                }
#if defined(__x86_64__) || defined(__i386__)
                __builtin_ia32_pause();
#endif
            }
            if (!got_work) {
                std::unique_lock<std::mutex> lock(mutex_);
                sleepers_.fetch_add(1, std::memory_order_release);
                cv_.wait(lock, [&] {
                    return stop_.load(std::memory_order_acquire) ||
                           generation_.load(std::memory_order_acquire) != seen;
                });
                sleepers_.fetch_sub(1, std::memory_order_release);
                if (stop_.load(std::memory_order_acquire)) return;
            }
            seen = generation_.load(std::memory_order_acquire);
            run_chunk(chunk, width(), task_n_, *task_);
            pending_.fetch_sub(1, std::memory_order_release);
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> generation_{0};
    std::atomic<int> pending_{0};
    std::atomic<int> sleepers_{0};
    std::uint64_t generation_notify_ = 0;  // guarded by mutex_, pairs with cv_
    const std::function<void(std::size_t, std::size_t)>* task_ = nullptr;
    std::size_t task_n_ = 0;
};

Pool& pool() {
    static Pool instance(resolve_thread_count());
    return instance;
}

}  // namespace

int thread_count() { return pool().width(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (n < 2 || pool().width() == 1) {
        fn(0, n);
        return;
    }
    pool().run(n, fn);
}

}  // namespace pvd
