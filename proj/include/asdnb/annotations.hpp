#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asdnb/common.hpp"

namespace asdnb {

struct Box {
    Real x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    Real width() const { return x2 - x1; }
    Real height() const { return y2 - y1; }
    Real area() const { return width() * height(); }
};

enum class SpeakingLabel { not_speaking = 0, speaking_audible = 1 };

// One row of AVA-style ground truth. Coordinates normalized to [0,1].
struct AnnotationRecord {
    std::string video_id;
    Real frame_timestamp = 0;
    Box face_box;
    std::optional<Box> body_box;
    SpeakingLabel label = SpeakingLabel::not_speaking;
    std::string entity_id;
};

// A track: all records of one (video_id, entity_id), sorted by timestamp.
struct AnnotationTrack {
    std::string video_id;
    std::string entity_id;
    std::vector<AnnotationRecord> records;
};

// CSV columns:
//   video_id,frame_timestamp,fx1,fy1,fx2,fy2,bx1,by1,bx2,by2,label,entity_id
// Body columns may be empty. Header row required. Throws ParseError (with
// line number) and DuplicateFrame.
std::vector<AnnotationTrack> load_annotations(const std::string& path);
std::vector<AnnotationTrack> parse_annotations(std::istream& in, const std::string& origin);

void write_annotations(const std::vector<AnnotationRecord>& records, const std::string& path);

// Body region from a face box (upper-body footage rule): twice the face
// width centered on the face, top at the face top, bottom at three face
// heights below it; clamped to the frame. Throws DegenerateBox when clamping
// leaves no area.
Box derive_body_box(const Box& face, Real frame_w, Real frame_h);

}  // namespace asdnb
