#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cskf {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

struct Vec3i {
    int x = 0, y = 0, z = 0;
    int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    bool operator==(const Vec3i& o) const { return x == o.x && y == o.y && z == o.z; }
    std::int64_t count() const { return std::int64_t(x) * y * z; }
};

// Axis-aligned box in physical coordinates.
struct Box {
    Vec3 lo, hi;
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
               p.z <= hi.z;
    }
    bool contains(const Box& b) const { return contains(b.lo) && contains(b.hi); }
    bool intersects(const Box& b) const {
        return lo.x <= b.hi.x && b.lo.x <= hi.x && lo.y <= b.hi.y && b.lo.y <= hi.y &&
               lo.z <= b.hi.z && b.lo.z <= hi.z;
    }
    Vec3 center() const { return {(lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2}; }
};

// ------------------------------------------------------------------
// Worker pool for cell-parallel passes. Each task owns a disjoint
// index range, so results are identical for any thread count.
// ------------------------------------------------------------------
class ThreadPool {
  public:
    explicit ThreadPool(int n_workers) {
        for (int i = 0; i < n_workers; ++i)
            workers_.emplace_back([this] { worker_loop(); });
    }
    ~ThreadPool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    void run(const std::function<void(int)>& task, int n_tasks) {
        if (n_tasks <= 0) return;
        {
            std::unique_lock<std::mutex> lk(mu_);
            task_ = &task;
            n_tasks_ = n_tasks;
            next_task_ = 0;
            remaining_ = n_tasks;
        }
        cv_.notify_all();
        // caller participates
        drain();
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [this] { return remaining_ == 0; });
        task_ = nullptr;
    }

    int size() const { return int(workers_.size()); }

  private:
    void drain() {
        for (;;) {
            int id;
            {
                std::unique_lock<std::mutex> lk(mu_);
                if (!task_ || next_task_ >= n_tasks_) return;
                id = next_task_++;
            }
            (*task_)(id);
            std::unique_lock<std::mutex> lk(mu_);
            if (--remaining_ == 0) done_cv_.notify_all();
        }
    }
    void worker_loop() {
        for (;;) {
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [this] { return stop_ || (task_ && next_task_ < n_tasks_); });
                if (stop_) return;
            }
            drain();
        }
    }

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(int)>* task_ = nullptr;
    int n_tasks_ = 0, next_task_ = 0, remaining_ = 0;
    bool stop_ = false;
};

inline int& worker_count() {
    static int n = [] {
        if (const char* env = std::getenv("CSKF_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        return int(std::thread::hardware_concurrency() > 0 ? std::thread::hardware_concurrency()
                                                           : 1);
    }();
    return n;
}

inline void set_worker_count(int n) { worker_count() = n < 1 ? 1 : n; }

// Splits [0, n) into contiguous chunks processed in parallel. fn(begin, end)
// must only write state owned by its own indices. min_parallel sets the item
// count below which the call stays serial; pass a small value for heavy items.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn,
                         std::int64_t min_parallel = 4096) {
    int threads = worker_count();
    if (threads <= 1 || n < std::max<std::int64_t>(2, min_parallel)) {
        fn(0, n);
        return;
    }
    static std::mutex pool_mu;
    static std::unique_ptr<ThreadPool> pool;
    static int pool_size = 0;
    std::unique_lock<std::mutex> lk(pool_mu);
    if (!pool || pool_size != threads - 1) {
        pool = std::make_unique<ThreadPool>(threads - 1);
        pool_size = threads - 1;
    }
    int chunks = threads;
    std::function<void(int)> task = [&](int c) {
        std::int64_t b = n * c / chunks;
        std::int64_t e = n * (c + 1) / chunks;
        if (b < e) fn(b, e);
    };
    pool->run(task, chunks);
}

}  // namespace cskf
