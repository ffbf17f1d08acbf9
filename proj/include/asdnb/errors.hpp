#pragma once

#include <stdexcept>
#include <string>

namespace asdnb {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define ASDNB_ERROR_TYPE(Name)                    \
    struct Name : Error {                         \
        explicit Name(const std::string& msg)     \
            : Error(std::string(#Name ": ") + msg) {} \
    }

// domain_core
ASDNB_ERROR_TYPE(MismatchedLengths);
ASDNB_ERROR_TYPE(AudioDurationMismatch);
ASDNB_ERROR_TYPE(ValueRange);

// audio_features
ASDNB_ERROR_TYPE(TooShort);
ASDNB_ERROR_TYPE(BadSampleRate);
ASDNB_ERROR_TYPE(EmptyInput);

// encoders / classifier
ASDNB_ERROR_TYPE(ShapeMismatch);
ASDNB_ERROR_TYPE(NotAligned);

// loss_schedule
ASDNB_ERROR_TYPE(EmptySequence);
ASDNB_ERROR_TYPE(BadEpoch);

// data_pipeline
ASDNB_ERROR_TYPE(ParseError);
ASDNB_ERROR_TYPE(DuplicateFrame);
ASDNB_ERROR_TYPE(DegenerateBox);
ASDNB_ERROR_TYPE(EmptyTrack);

// trainer
ASDNB_ERROR_TYPE(NonFiniteLoss);
ASDNB_ERROR_TYPE(EmptyDataset);
ASDNB_ERROR_TYPE(CheckpointError);

// evaluator
ASDNB_ERROR_TYPE(NoPositives);
ASDNB_ERROR_TYPE(LengthMismatch);
ASDNB_ERROR_TYPE(JoinFailure);

// io / cli
ASDNB_ERROR_TYPE(IoError);
ASDNB_ERROR_TYPE(ConfigError);

#undef ASDNB_ERROR_TYPE

}  // namespace asdnb
