#include "asdnb/classifier.hpp"

#include "asdnb/errors.hpp"

namespace asdnb {

SequenceClassifier::SequenceClassifier(const std::string& name, int input_dim, int hidden,
                                       TemporalMode mode, nn::Rng& rng)
    : mode_(mode) {
    int head_in = input_dim;
    switch (mode_) {
        case TemporalMode::none:
            break;
        case TemporalMode::forward_gru:
        case TemporalMode::bidirectional_gru:
            gru_ = std::make_unique<nn::GRU>(name + ".gru", input_dim, hidden,
                                             mode_ == TemporalMode::bidirectional_gru, rng);
            head_in = gru_->output_dim();
            break;
        case TemporalMode::forward_lstm:
        case TemporalMode::bidirectional_lstm:
            lstm_ = std::make_unique<nn::LSTM>(name + ".lstm", input_dim, hidden,
                                               mode_ == TemporalMode::bidirectional_lstm, rng);
            head_in = lstm_->output_dim();
            break;
    }
    head_ = std::make_unique<nn::Linear>(name + ".fc", head_in, 1, rng);
}

void SequenceClassifier::params(nn::ParamRefs& out) {
    if (gru_) gru_->params(out);
    if (lstm_) lstm_->params(out);
    head_->params(out);
}

std::int64_t SequenceClassifier::num_parameters() {
    nn::ParamRefs refs;
    params(refs);
    return nn::count_parameters(refs);
}

Tensor SequenceClassifier::forward(const Tensor& x) {
    if (x.ndim() != 3) throw ShapeMismatch("classifier input " + x.shape_str());
    batch_ = x.dim(0);
    frames_ = x.dim(1);
    Tensor seq = gru_ ? gru_->forward(x) : (lstm_ ? lstm_->forward(x) : x);
    Tensor logits = head_->forward(seq);  // [B,T,1]
    return logits.reshaped({batch_, frames_});
}

Tensor SequenceClassifier::forward_embedding(const EmbeddingSequence& seq, Modality expected) {
    if (seq.modality != expected) throw ShapeMismatch("classifier fed the wrong embedding modality");
    const std::int64_t frames = seq.values.dim(0);
    const std::int64_t dim = seq.values.dim(1);
    return forward(seq.values.reshaped({1, frames, dim})).reshaped({frames});
}

Tensor SequenceClassifier::backward(const Tensor& gy) {
    Tensor g = head_->backward(gy.reshaped({batch_, frames_, 1}));
    if (gru_) return gru_->backward(g);
    if (lstm_) return lstm_->backward(g);
    return g;
}

}  // namespace asdnb
