#pragma once

#include <string>
#include <vector>

#include "asdnb/nn/module.hpp"
#include "asdnb/tensor.hpp"

namespace asdnb::nn {

// Single-layer GRU, optionally bidirectional. Input [B,T,D], output
// [B,T,H*dirs] (direction outputs concatenated). Gate layout follows the
// r,z,n convention with separate input/hidden biases.
class GRU {
public:
    GRU(std::string name, int input_dim, int hidden, bool bidirectional, Rng& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void params(ParamRefs& out);

    int output_dim() const { return hidden_ * (bidirectional_ ? 2 : 1); }

private:
    struct Direction {
        Parameter w_ih, w_hh, b_ih, b_hh;
        Tensor r, z, n, u, h;  // caches, each [B,T,H]
    };
    void run_direction(Direction& d, const Tensor& x, bool reverse, Tensor& y, int dir_index);
    Tensor backward_direction(Direction& d, const Tensor& gy, bool reverse, int dir_index);

    int input_dim_, hidden_;
    bool bidirectional_;
    std::vector<Direction> dirs_;
    Tensor x_;
};

// Single-layer LSTM with the same interface (temporal-modeling ablations).
class LSTM {
public:
    LSTM(std::string name, int input_dim, int hidden, bool bidirectional, Rng& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& gy);
    void params(ParamRefs& out);

    int output_dim() const { return hidden_ * (bidirectional_ ? 2 : 1); }

private:
    struct Direction {
        Parameter w_ih, w_hh, b_ih, b_hh;
        Tensor i, f, g, o, c, h;  // caches, each [B,T,H]
    };
    void run_direction(Direction& d, const Tensor& x, bool reverse, Tensor& y, int dir_index);
    Tensor backward_direction(Direction& d, const Tensor& gy, bool reverse, int dir_index);

    int input_dim_, hidden_;
    bool bidirectional_;
    std::vector<Direction> dirs_;
    Tensor x_;
};

}  // namespace asdnb::nn
