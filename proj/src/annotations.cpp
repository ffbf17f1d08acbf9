#include "asdnb/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "asdnb/errors.hpp"

namespace asdnb {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

Real parse_real(const std::string& s, const std::string& origin, std::size_t line_no,
                const char* what) {
    try {
        std::size_t pos = 0;
        const Real v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(origin + ":" + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

void check_box(const Box& b, const std::string& origin, std::size_t line_no, const char* what) {
    if (!(b.x1 < b.x2) || !(b.y1 < b.y2))
        throw ParseError(origin + ":" + std::to_string(line_no) + ": degenerate " + what + " box");
    for (Real v : {b.x1, b.y1, b.x2, b.y2})
        if (!(v >= 0.0 && v <= 1.0))
            throw ParseError(origin + ":" + std::to_string(line_no) + ": " + what +
                             " coordinate outside [0,1]");
}

}  // namespace

std::vector<AnnotationTrack> parse_annotations(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(origin + ": empty file");

    std::map<std::pair<std::string, std::string>, AnnotationTrack> tracks;
    std::set<std::tuple<std::string, std::string, long long>> seen;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 12)
            throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 12 columns, got " +
                             std::to_string(cols.size()));

        AnnotationRecord rec;
        rec.video_id = cols[0];
        rec.frame_timestamp = parse_real(cols[1], origin, line_no, "timestamp");
        rec.face_box = {parse_real(cols[2], origin, line_no, "fx1"),
                        parse_real(cols[3], origin, line_no, "fy1"),
                        parse_real(cols[4], origin, line_no, "fx2"),
                        parse_real(cols[5], origin, line_no, "fy2")};
        check_box(rec.face_box, origin, line_no, "face");
        const bool has_body = !cols[6].empty() || !cols[7].empty() || !cols[8].empty() || !cols[9].empty();
        if (has_body) {
            Box body = {parse_real(cols[6], origin, line_no, "bx1"),
                        parse_real(cols[7], origin, line_no, "by1"),
                        parse_real(cols[8], origin, line_no, "bx2"),
                        parse_real(cols[9], origin, line_no, "by2")};
            check_box(body, origin, line_no, "body");
            rec.body_box = body;
        }
        if (cols[10] == "SPEAKING_AUDIBLE")
            rec.label = SpeakingLabel::speaking_audible;
        else if (cols[10] == "NOT_SPEAKING")
            rec.label = SpeakingLabel::not_speaking;
        else
            throw ParseError(origin + ":" + std::to_string(line_no) + ": unknown label '" + cols[10] + "'");
        rec.entity_id = cols[11];
        if (rec.entity_id.empty())
            throw ParseError(origin + ":" + std::to_string(line_no) + ": empty entity_id");

        const auto frame_key = std::make_tuple(rec.video_id, rec.entity_id,
                                               std::llround(rec.frame_timestamp * 1000.0));
        if (!seen.insert(frame_key).second)
            throw DuplicateFrame(origin + ":" + std::to_string(line_no) + ": repeated (video, entity, timestamp)");

        auto& track = tracks[{rec.video_id, rec.entity_id}];
        track.video_id = rec.video_id;
        track.entity_id = rec.entity_id;
        track.records.push_back(rec);
    }

    std::vector<AnnotationTrack> out;
    out.reserve(tracks.size());
    for (auto& [key, track] : tracks) {
        std::stable_sort(track.records.begin(), track.records.end(),
                         [](const AnnotationRecord& a, const AnnotationRecord& b) {
                             return a.frame_timestamp < b.frame_timestamp;
                         });
        out.push_back(std::move(track));
    }
    return out;
}

std::vector<AnnotationTrack> load_annotations(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path + ": cannot open");
    return parse_annotations(f, path);
}

void write_annotations(const std::vector<AnnotationRecord>& records, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "video_id,frame_timestamp,fx1,fy1,fx2,fy2,bx1,by1,bx2,by2,label,entity_id\n";
    f.precision(17);
    for (const auto& r : records) {
        f << r.video_id << ',' << r.frame_timestamp << ',' << r.face_box.x1 << ',' << r.face_box.y1
          << ',' << r.face_box.x2 << ',' << r.face_box.y2 << ',';
        if (r.body_box)
            f << r.body_box->x1 << ',' << r.body_box->y1 << ',' << r.body_box->x2 << ','
              << r.body_box->y2;
        else
            f << ",,,";
        f << ',' << (r.label == SpeakingLabel::speaking_audible ? "SPEAKING_AUDIBLE" : "NOT_SPEAKING")
          << ',' << r.entity_id << '\n';
    }
}

Box derive_body_box(const Box& face, Real frame_w, Real frame_h) {
    if (!(face.x1 < face.x2) || !(face.y1 < face.y2))
        throw DegenerateBox("face box has no area");
    const Real cx = (face.x1 + face.x2) / 2;
    const Real w = face.width();
    const Real h = face.height();
    Box body;
    body.x1 = std::max<Real>(0.0, cx - w);
    body.x2 = std::min<Real>(frame_w, cx + w);
    body.y1 = std::max<Real>(0.0, face.y1);
    body.y2 = std::min<Real>(frame_h, face.y1 + 3 * h);
    if (!(body.x1 < body.x2) || !(body.y1 < body.y2))
        throw DegenerateBox("body box collapsed after clamping to the frame");
    return body;
}

}  // namespace asdnb
