#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace rmcnoc {

/// Bounded FIFO over a fixed ring of slots. Capacity is set once at construction.
template <typename T>
class RingFifo {
public:
    RingFifo() = default;
    explicit RingFifo(std::size_t capacity) : slots_(capacity) {}

    std::size_t capacity() const { return slots_.size(); }
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    bool full() const { return size_ == slots_.size(); }

    void push(const T& v) {
        assert(!full());
        slots_[(head_ + size_) % slots_.size()] = v;
        ++size_;
    }

    T pop() {
        assert(!empty());
        T v = slots_[head_];
        head_ = (head_ + 1) % slots_.size();
        --size_;
        return v;
    }

    const T& front() const {
        assert(!empty());
        return slots_[head_];
    }

    /// i-th element counted from the front.
    const T& operator[](std::size_t i) const { return slots_[(head_ + i) % slots_.size()]; }

    void clear() {
        head_ = 0;
        size_ = 0;
    }

private:
    std::vector<T> slots_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

}  // namespace rmcnoc
