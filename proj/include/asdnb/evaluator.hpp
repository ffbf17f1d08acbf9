#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asdnb/annotations.hpp"
#include "asdnb/common.hpp"

namespace asdnb {

struct PredictionRecord {
    std::string video_id;
    Real frame_timestamp = 0;
    std::string entity_id;
    Real score = 0;                 // speaking probability in [0,1]
    std::optional<int> decision;    // thresholded binary, when materialized
};

// Non-interpolated AP: stable sort by descending score (ties keep input
// order), mean of precision-at-rank over the positive ranks.
// Throws NoPositives and LengthMismatch.
Real average_precision(const std::vector<Real>& scores, const std::vector<int>& labels);

// Mean of per-video APs over videos that contain at least one positive.
struct VideoPredictions {
    std::vector<Real> scores;
    std::vector<int> labels;
};
Real mean_average_precision(const std::map<std::string, VideoPredictions>& by_video);

struct F1Result {
    Real f1 = 0;
    Real precision = 0;
    Real recall = 0;
};
F1Result f1_score(const std::vector<int>& decisions, const std::vector<int>& labels);

// Analysis buckets: face width in pixels (Small < 64, Middle 64-128,
// Large > 128), number of faces in frame (1/2/3, larger counts excluded),
// and head-body proportion subsets (lowest-k% by face/body area ratio).
struct BucketSpec {
    Real small_max_px = 64;
    Real large_min_px = 128;
    std::vector<int> hbp_percentiles = {20, 40, 60, 80, 100};
    Real frame_w_px = 112;  // pixel scale applied to normalized boxes
    Real frame_h_px = 112;
};

struct BucketResult {
    std::string bucket;
    Real map = 0;
    std::int64_t count = 0;  // joined samples in the bucket
};

struct BreakdownReport {
    std::vector<BucketResult> face_size;   // buckets without positives are absent
    std::vector<BucketResult> num_faces;
    std::vector<BucketResult> hbp;         // "Small"... vs "20%"... naming per axis
    Real overall_map = 0;
};

// Joins predictions to annotations on (video, entity, timestamp); throws
// JoinFailure for an unmatched prediction.
BreakdownReport bucketed_map(const std::vector<PredictionRecord>& predictions,
                             const std::vector<AnnotationTrack>& annotations,
                             const BucketSpec& spec);

// Prediction CSV: video_id,frame_timestamp,entity_id,score (header row).
void write_predictions(const std::vector<PredictionRecord>& predictions, const std::string& path);
std::vector<PredictionRecord> load_predictions(const std::string& path);

}  // namespace asdnb
