#pragma once

#include <memory>
#include <string>

#include "asdnb/nn/layers.hpp"
#include "asdnb/nn/recurrent.hpp"
#include "asdnb/types.hpp"

namespace asdnb {

// Sequence classifier head: temporal layer (bidirectional GRU by default,
// switchable to forward GRU/LSTM, bidirectional LSTM, or none) followed by a
// linear map to one logit per frame. sigmoid(logit) is the speaking
// probability.
class SequenceClassifier {
public:
    SequenceClassifier(const std::string& name, int input_dim, int hidden, TemporalMode mode,
                       nn::Rng& rng);

    Tensor forward(const Tensor& x);  // [B,T,D] -> [B,T]
    Tensor backward(const Tensor& gy);

    // single-clip surface with modality enforcement: sigmoid(logit) is the
    // per-frame speaking probability
    Tensor forward_embedding(const EmbeddingSequence& seq, Modality expected);

    void params(nn::ParamRefs& out);
    std::int64_t num_parameters();

private:
    TemporalMode mode_;
    std::int64_t batch_ = 0, frames_ = 0;
    std::unique_ptr<nn::GRU> gru_;
    std::unique_ptr<nn::LSTM> lstm_;
    std::unique_ptr<nn::Linear> head_;
};

}  // namespace asdnb
