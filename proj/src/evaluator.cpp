#include "asdnb/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <tuple>

#include "asdnb/errors.hpp"

namespace asdnb {

Real average_precision(const std::vector<Real>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw LengthMismatch("average_precision: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels.size()) + " labels");
    const std::int64_t npos = std::count(labels.begin(), labels.end(), 1);
    if (npos == 0) throw NoPositives("average_precision needs at least one positive label");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    Real sum = 0;
    std::int64_t cum_pos = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] == 1) {
            ++cum_pos;
            sum += static_cast<Real>(cum_pos) / static_cast<Real>(rank + 1);
        }
    }
    return sum / static_cast<Real>(npos);
}

Real mean_average_precision(const std::map<std::string, VideoPredictions>& by_video) {
    Real sum = 0;
    int counted = 0;
    for (const auto& [video, preds] : by_video) {
        if (std::count(preds.labels.begin(), preds.labels.end(), 1) == 0) continue;
        sum += average_precision(preds.scores, preds.labels);
        ++counted;
    }
    if (counted == 0) throw NoPositives("no video has a positive label");
    return sum / counted;
}

F1Result f1_score(const std::vector<int>& decisions, const std::vector<int>& labels) {
    if (decisions.size() != labels.size())
        throw LengthMismatch("f1_score: " + std::to_string(decisions.size()) + " decisions vs " +
                             std::to_string(labels.size()) + " labels");
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (decisions[i] == 1 && labels[i] == 1) ++tp;
        if (decisions[i] == 1 && labels[i] == 0) ++fp;
        if (decisions[i] == 0 && labels[i] == 1) ++fn;
    }
    F1Result r;
    r.precision = tp + fp > 0 ? static_cast<Real>(tp) / static_cast<Real>(tp + fp) : 0.0;
    r.recall = tp + fn > 0 ? static_cast<Real>(tp) / static_cast<Real>(tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

namespace {

struct JoinedSample {
    const PredictionRecord* pred;
    const AnnotationRecord* anno;
};

long long ts_key(Real timestamp) {
    return std::llround(timestamp * 1000.0);
}

// mAP of a sample subset, grouped per video; nullopt when no positives
std::optional<Real> subset_map(const std::vector<JoinedSample>& samples) {
    std::map<std::string, VideoPredictions> by_video;
    for (const auto& s : samples) {
        auto& v = by_video[s.pred->video_id];
        v.scores.push_back(s.pred->score);
        v.labels.push_back(s.anno->label == SpeakingLabel::speaking_audible ? 1 : 0);
    }
    try {
        return mean_average_precision(by_video);
    } catch (const NoPositives&) {
        return std::nullopt;
    }
}

}  // namespace

BreakdownReport bucketed_map(const std::vector<PredictionRecord>& predictions,
                             const std::vector<AnnotationTrack>& annotations,
                             const BucketSpec& spec) {
    std::map<std::tuple<std::string, std::string, long long>, const AnnotationRecord*> index;
    std::map<std::pair<std::string, long long>, int> faces_per_frame;
    for (const auto& track : annotations)
        for (const auto& rec : track.records) {
            index[{rec.video_id, rec.entity_id, ts_key(rec.frame_timestamp)}] = &rec;
            faces_per_frame[{rec.video_id, ts_key(rec.frame_timestamp)}] += 1;
        }

    std::vector<JoinedSample> joined;
    joined.reserve(predictions.size());
    for (const auto& p : predictions) {
        auto it = index.find({p.video_id, p.entity_id, ts_key(p.frame_timestamp)});
        if (it == index.end())
            throw JoinFailure("prediction (" + p.video_id + ", " + p.entity_id + ", " +
                              std::to_string(p.frame_timestamp) + ") has no annotation");
        joined.push_back({&p, it->second});
    }

    BreakdownReport report;
    {
        auto overall = subset_map(joined);
        if (!overall) throw NoPositives("no positives in the joined prediction set");
        report.overall_map = *overall;
    }

    // face-size buckets
    std::map<std::string, std::vector<JoinedSample>> by_size;
    for (const auto& s : joined) {
        const Real width_px = s.anno->face_box.width() * spec.frame_w_px;
        const char* bucket = width_px < spec.small_max_px ? "Small"
                             : width_px <= spec.large_min_px ? "Middle"
                                                             : "Large";
        by_size[bucket].push_back(s);
    }
    for (const char* name : {"Small", "Middle", "Large"}) {
        auto it = by_size.find(name);
        if (it == by_size.end()) continue;
        if (auto m = subset_map(it->second))
            report.face_size.push_back({name, *m, static_cast<std::int64_t>(it->second.size())});
    }

    // number-of-faces buckets (1, 2, 3; frames with more faces are excluded)
    std::map<int, std::vector<JoinedSample>> by_count;
    for (const auto& s : joined) {
        const int n = faces_per_frame[{s.anno->video_id, ts_key(s.anno->frame_timestamp)}];
        if (n >= 1 && n <= 3) by_count[n].push_back(s);
    }
    for (const auto& [n, samples] : by_count)
        if (auto m = subset_map(samples))
            report.num_faces.push_back({std::to_string(n), *m,
                                        static_cast<std::int64_t>(samples.size())});

    // head-body proportion: lowest-k% subsets by face/body area ratio
    std::vector<JoinedSample> with_body;
    for (const auto& s : joined)
        if (s.anno->body_box && s.anno->body_box->area() > 0) with_body.push_back(s);
    if (!with_body.empty()) {
        std::stable_sort(with_body.begin(), with_body.end(), [](const JoinedSample& a, const JoinedSample& b) {
            return a.anno->face_box.area() / a.anno->body_box->area() <
                   b.anno->face_box.area() / b.anno->body_box->area();
        });
        for (int k : spec.hbp_percentiles) {
            const auto n = static_cast<std::size_t>(
                std::llround(static_cast<Real>(with_body.size()) * k / 100.0));
            if (n == 0) continue;
            std::vector<JoinedSample> subset(with_body.begin(),
                                             with_body.begin() + static_cast<std::ptrdiff_t>(n));
            if (auto m = subset_map(subset))
                report.hbp.push_back({std::to_string(k) + "%", *m, static_cast<std::int64_t>(n)});
        }
    }
    return report;
}

void write_predictions(const std::vector<PredictionRecord>& predictions, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "video_id,frame_timestamp,entity_id,score\n";
    f.precision(17);
    for (const auto& p : predictions)
        f << p.video_id << ',' << p.frame_timestamp << ',' << p.entity_id << ',' << p.score << '\n';
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError(path + ": cannot open");
    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ": empty file");
    std::vector<PredictionRecord> out;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream ss(line);
        PredictionRecord p;
        std::string ts, score;
        if (!std::getline(ss, p.video_id, ',') || !std::getline(ss, ts, ',') ||
            !std::getline(ss, p.entity_id, ',') || !std::getline(ss, score))
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 columns");
        try {
            p.frame_timestamp = std::stod(ts);
            p.score = std::stod(score);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad number");
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace asdnb
