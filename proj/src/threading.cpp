#include "asdnb/threading.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace asdnb {
namespace {

int g_num_threads = []() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}();

// Persistent pool: spawning threads per conv call would dominate small layers.
class Pool {
public:
    explicit Pool(int workers) : stop_(false), generation_(0), pending_(0) {
        for (int i = 0; i < workers; ++i) {
            threads_.emplace_back([this, i] { worker_loop(i + 1); });
        }
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_task_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void run(const std::function<void(int)>& chunk_fn, int chunks) {
        {
            std::lock_guard<std::mutex> lk(mu_);
            task_ = &chunk_fn;
            task_chunks_ = chunks;
            pending_ = chunks - 1;  // chunk 0 runs on the caller
            ++generation_;
        }
        cv_task_.notify_all();
        chunk_fn(0);
        std::unique_lock<std::mutex> lk(mu_);
        cv_done_.wait(lk, [this] { return pending_ == 0; });
        task_ = nullptr;
    }

private:
    void worker_loop(int index) {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(int)>* task = nullptr;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_task_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                if (index < task_chunks_) task = task_;
            }
            if (task) {
                (*task)(index);
                std::lock_guard<std::mutex> lk(mu_);
                if (--pending_ == 0) cv_done_.notify_one();
            }
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable cv_task_;
    std::condition_variable cv_done_;
    bool stop_;
    std::uint64_t generation_;
    int pending_;
    const std::function<void(int)>* task_ = nullptr;
    int task_chunks_ = 0;
};

Pool* g_pool = nullptr;
int g_pool_workers = 0;

void ensure_pool() {
    if (g_num_threads > 1 && g_pool_workers != g_num_threads - 1) {
        delete g_pool;
        g_pool = new Pool(g_num_threads - 1);
        g_pool_workers = g_num_threads - 1;
    }
}

}  // namespace

void set_num_threads(int n) {
    g_num_threads = n < 1 ? 1 : n;
}

int num_threads() {
    return g_num_threads;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t, int)>& fn) {
    if (n <= 0) return;
    const int nt = g_num_threads;
    if (nt == 1 || n == 1) {
        fn(0, n, 0);
        return;
    }
    ensure_pool();
    const int chunks = static_cast<int>(n < nt ? n : nt);
    const std::int64_t base = n / chunks, rem = n % chunks;
    auto chunk_fn = std::function<void(int)>([&](int c) {
        const std::int64_t begin = c * base + (c < rem ? c : rem);
        const std::int64_t end = begin + base + (c < rem ? 1 : 0);
        fn(begin, end, c);
    });
    g_pool->run(chunk_fn, chunks);
}

}  // namespace asdnb
