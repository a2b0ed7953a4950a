#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "leaftrack/assignment.hpp"
#include "leaftrack/config.hpp"
#include "leaftrack/dse.hpp"
#include "leaftrack/evaluation.hpp"
#include "leaftrack/heuristics.hpp"
#include "leaftrack/hull.hpp"
#include "leaftrack/manifest.hpp"
#include "leaftrack/overlay.hpp"
#include "leaftrack/png_io.hpp"
#include "leaftrack/serialize.hpp"
#include "leaftrack/skeleton.hpp"
#include "leaftrack/timeline.hpp"

namespace leaftrack {

struct RunOptions {
    std::string out_dir; // empty disables persistence
    bool resume = false;
    int jobs = 1;
};

// First day whose segmented area reaches min_area; nullopt when the plant
// never shows up.
inline std::optional<int> detect_emergence(
    const std::vector<std::pair<int, std::size_t>>& day_areas, int min_area) {
    for (const auto& [day, area] : day_areas)
        if (area >= static_cast<std::size_t>(min_area)) return day;
    return std::nullopt;
}

namespace detail {

inline std::vector<LeafCandidate> leaves_or_empty(const SkeletonGraph& g) {
    try {
        return identify_stem_and_leaves(g).leaves;
    } catch (const std::runtime_error&) {
        return {};
    }
}

inline std::string day_tag(int day) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "day%02d", day);
    return buf;
}

inline void ensure_dir(const std::filesystem::path& p) {
    std::filesystem::create_directories(p);
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

} // namespace detail

struct DayInputs {
    std::optional<Raster> img0;
    std::optional<Raster> img90;
};

// Segmentation and view selection for one day; the chosen mask feeds the
// skeleton stages. A view with no usable image contributes an empty mask.
struct SegmentedDay {
    BinaryMask mask0;
    BinaryMask mask90;
    std::size_t plant_area() const {
        const std::size_t a0 = mask0.width() ? mask0.area() : 0;
        const std::size_t a90 = mask90.width() ? mask90.area() : 0;
        return std::max(a0, a90);
    }
};

inline SegmentedDay segment_day(const DayInputs& in, const Raster& bg0,
                                const Raster& bg90, const Config& cfg) {
    SegmentedDay out;
    if (in.img0) out.mask0 = segment_plant(*in.img0, bg0, cfg.segmentation);
    if (in.img90) out.mask90 = segment_plant(*in.img90, bg90, cfg.segmentation);
    return out;
}

// The per-day detection chain after segmentation: view selection,
// day-gated thinning, graph extraction, evolution pruning, heuristics.
inline PlantDayRecord process_day(const std::string& plant_id, int day,
                                  int days_since_emergence,
                                  const SegmentedDay& seg, const Config& cfg) {
    PlantDayRecord rec;
    rec.plant_id = plant_id;
    rec.day = day;
    rec.days_since_emergence = days_since_emergence;

    const bool e0 = seg.mask0.width() == 0 || seg.mask0.empty();
    const bool e90 = seg.mask90.width() == 0 || seg.mask90.empty();
    if (e0 && e90) {
        rec.processed = false;
        return rec;
    }
    BinaryMask fallback(1, 1);
    const BinaryMask& m0 = seg.mask0.width() ? seg.mask0 : fallback;
    const BinaryMask& m90 = seg.mask90.width() ? seg.mask90 : fallback;
    const ViewChoice choice = select_view(m0, m90);
    rec.chosen_view = choice.view;
    rec.hull_area0 = choice.area0;
    rec.hull_area90 = choice.area90;
    const BinaryMask& mask = choice.view == View::view0 ? seg.mask0 : seg.mask90;

    const BinaryMask skel = skeletonize(mask, days_since_emergence);
    SkeletonGraph g = extract_graph(skel);
    rec.phases.post_skeleton = detail::leaves_or_empty(g);

    g = dse_prune(g, cfg.dse, &rec.audit);
    rec.phases.post_dse = detail::leaves_or_empty(g);

    g = apply_heuristics(g, mask, days_since_emergence, cfg.heuristics, &rec.audit);
    rec.phases.post_heuristics = detail::leaves_or_empty(g);

    rec.skeleton = g;
    rec.leaves = rec.phases.post_heuristics;
    return rec;
}

struct PlantRunReport {
    std::string plant_id;
    std::optional<int> emergence_day;
    std::vector<int> skipped_days; // unreadable or failed days
};

// Full per-plant pipeline: segmentation of both views for every day,
// emergence detection, per-day processing, then temporal reconciliation.
// With an output directory set, every stage is persisted under its own
// subdirectory; with resume, days whose detection record exists on disk
// are loaded instead of recomputed.
inline PlantTimeline run_plant(const Manifest& manifest, const std::string& plant_id,
                               const Config& cfg, const RunOptions& opts = {},
                               PlantRunReport* report = nullptr) {
    namespace fs = std::filesystem;
    const fs::path out(opts.out_dir);
    const bool persist = !opts.out_dir.empty();

    PlantRunReport local_report;
    local_report.plant_id = plant_id;

    std::optional<Raster> bg0, bg90;
    if (manifest.backgrounds.count(0))
        bg0 = read_png(manifest.resolve(manifest.backgrounds.at(0)));
    if (manifest.backgrounds.count(90))
        bg90 = read_png(manifest.resolve(manifest.backgrounds.at(90)));
    if (!bg0 && !bg90)
        throw std::runtime_error("run_plant: manifest provides no background images");
    const Raster& b0 = bg0 ? *bg0 : *bg90;
    const Raster& b90 = bg90 ? *bg90 : *bg0;

    std::map<int, PlantDayRecord> cached;
    std::map<int, SegmentedDay> segmented;
    std::map<int, DayInputs> inputs;

    for (int day : manifest.days_of(plant_id)) {
        if (persist && opts.resume) {
            const fs::path rec_path =
                out / "detections" / (plant_id + "_" + detail::day_tag(day) + ".json");
            if (fs::exists(rec_path)) {
                std::ifstream in(rec_path);
                json j;
                in >> j;
                cached[day] = record_from_json(j);
                continue;
            }
        }
        DayInputs in;
        try {
            const ManifestEntry* e0 = manifest.find(plant_id, day, 0);
            const ManifestEntry* e90 = manifest.find(plant_id, day, 90);
            if (e0) in.img0 = read_png(manifest.resolve(e0->image_path));
            if (e90) in.img90 = read_png(manifest.resolve(e90->image_path));
        } catch (const std::exception&) {
            local_report.skipped_days.push_back(day);
            continue;
        }
        if (!in.img0 && !in.img90) {
            local_report.skipped_days.push_back(day);
            continue;
        }
        segmented[day] = segment_day(in, b0, b90, cfg);
        inputs[day] = std::move(in);
    }

    // Emergence: derive it from resumed records when available, otherwise
    // scan the segmented areas in day order.
    std::optional<int> emergence;
    for (const auto& [day, rec] : cached)
        if (rec.days_since_emergence >= 1) {
            emergence = rec.day - rec.days_since_emergence + 1;
            break;
        }
    if (!emergence) {
        std::vector<std::pair<int, std::size_t>> areas;
        for (const auto& [day, seg] : segmented) areas.push_back({day, seg.plant_area()});
        emergence = detect_emergence(areas, cfg.emergence_min_area);
    }
    local_report.emergence_day = emergence;
    if (report) *report = local_report;

    PlantTimeline tl;
    tl.plant_id = plant_id;
    if (!emergence) {
        if (report) *report = local_report;
        return tl;
    }

    for (const auto& [day, rec] : cached) tl.records.push_back(rec);
    for (const auto& [day, seg] : segmented) {
        if (day < *emergence) continue;
        const int dse_day = day - *emergence + 1;
        PlantDayRecord rec = process_day(plant_id, day, dse_day, seg, cfg);
        if (persist) {
            const std::string tag = plant_id + "_" + detail::day_tag(day);
            detail::ensure_dir(out / "masks");
            detail::ensure_dir(out / "views");
            detail::ensure_dir(out / "skeletons");
            detail::ensure_dir(out / "graphs");
            detail::ensure_dir(out / "detections");
            if (seg.mask0.width())
                write_mask_png((out / "masks" / (tag + "_view0.png")).string(),
                               seg.mask0);
            if (seg.mask90.width())
                write_mask_png((out / "masks" / (tag + "_view90.png")).string(),
                               seg.mask90);
            json jview = {{"view", rec.chosen_view == View::view90 ? 90 : 0},
                          {"hull_area0", rec.hull_area0},
                          {"hull_area90", rec.hull_area90}};
            detail::write_text(out / "views" / (tag + ".json"), jview.dump(2) + "\n");
            if (rec.skeleton.width > 0)
                write_mask_png((out / "skeletons" / (tag + ".png")).string(),
                               rec.skeleton.mask);
            detail::write_text(out / "graphs" / (tag + ".json"),
                               graph_to_json(rec.skeleton).dump(2) + "\n");
            detail::write_text(out / "detections" / (tag + ".json"),
                               record_to_json(rec).dump(2) + "\n");
        }
        tl.records.push_back(std::move(rec));
    }
    std::sort(tl.records.begin(), tl.records.end(),
              [](const PlantDayRecord& a, const PlantDayRecord& b) {
                  return a.day < b.day;
              });

    tl = reconcile_timeline(tl, cfg.reconcile);
    if (persist) {
        detail::ensure_dir(out / "timelines");
        detail::write_text(out / "timelines" / (plant_id + ".json"),
                           timeline_to_json(tl).dump(2) + "\n");
    }
    return tl;
}

struct PhaseMetrics {
    ConfusionCounts counts;
    std::optional<double> precision;
    std::optional<double> recall;
};

struct DatasetMetrics {
    std::map<std::string, PhaseMetrics> phases; // keyed by phase name
    LossStats loss;
    // Per plant: ground truth total and per-phase (true, false) counts.
    struct PlantRow {
        std::string plant_id;
        long long ground_truth = 0;
        std::map<std::string, std::pair<long long, long long>> phase_counts;
    };
    std::vector<PlantRow> rows;
};

namespace detail {

inline const std::vector<std::string>& phase_names() {
    static const std::vector<std::string> names = {
        "post_skeleton", "post_dse", "post_heuristics", "final"};
    return names;
}

inline std::vector<DayDetections> phase_detections(const PlantTimeline& tl,
                                                   const std::string& phase) {
    std::vector<DayDetections> out;
    for (const auto& rec : tl.records) {
        if (!rec.processed) continue;
        DayDetections d;
        d.day = rec.day;
        d.view = rec.chosen_view == View::view90 ? 90 : 0;
        if (phase == "post_skeleton") d.leaves = rec.phases.post_skeleton;
        else if (phase == "post_dse") d.leaves = rec.phases.post_dse;
        else if (phase == "post_heuristics") d.leaves = rec.phases.post_heuristics;
        else d.leaves = rec.leaves;
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace detail

// Scores reconciled timelines against ground truth, per pipeline phase.
// Only truth days that have a processed record contribute.
inline DatasetMetrics evaluate_timelines(
    const std::vector<PlantTimeline>& timelines,
    const std::map<std::string, GroundTruth>& truths, const EvaluationParams& params) {
    DatasetMetrics m;
    std::map<std::string, ConfusionCounts> totals;
    std::vector<int> predicted, truth_counts;

    for (const auto& tl : timelines) {
        const auto it = truths.find(tl.plant_id);
        if (it == truths.end()) continue;
        DatasetMetrics::PlantRow row;
        row.plant_id = tl.plant_id;
        for (const auto& rec : tl.records) {
            if (!rec.processed) continue;
            const auto dit = it->second.days.find(rec.day);
            if (dit == it->second.days.end()) continue;
            row.ground_truth += dit->second.max_count();
            predicted.push_back(rec.detected_count());
            truth_counts.push_back(dit->second.max_count());
        }
        for (const auto& phase : detail::phase_names()) {
            std::vector<DayDetections> dets = detail::phase_detections(tl, phase);
            // Keep only days covered by the truth.
            std::vector<DayDetections> kept;
            for (auto& d : dets)
                if (it->second.days.count(d.day)) kept.push_back(std::move(d));
            const ConfusionCounts c = confusion_counts(kept, it->second, params);
            totals[phase].tp += c.tp;
            totals[phase].fp += c.fp;
            totals[phase].fn += c.fn;
            row.phase_counts[phase] = {c.tp, c.fp};
        }
        m.rows.push_back(std::move(row));
    }
    for (const auto& phase : detail::phase_names()) {
        PhaseMetrics pm;
        pm.counts = totals[phase];
        const PrecisionRecall pr =
            precision_recall(pm.counts.tp, pm.counts.fp, pm.counts.fn);
        pm.precision = pr.precision;
        pm.recall = pr.recall;
        m.phases[phase] = pm;
    }
    m.loss = absolute_loss_stats(predicted, truth_counts);
    return m;
}

inline std::string metrics_csv(const DatasetMetrics& m) {
    std::string csv =
        "plant,ground_truth,skeleton_true,skeleton_false,dse_true,dse_false,"
        "heuristics_true,heuristics_false,final_true,final_false\n";
    for (const auto& row : m.rows) {
        csv += row.plant_id + "," + std::to_string(row.ground_truth);
        for (const auto& phase : detail::phase_names()) {
            const auto it = row.phase_counts.find(phase);
            const auto [t, f] = it == row.phase_counts.end()
                                    ? std::pair<long long, long long>{0, 0}
                                    : it->second;
            csv += "," + std::to_string(t) + "," + std::to_string(f);
        }
        csv += "\n";
    }
    return csv;
}

inline json metrics_to_json(const DatasetMetrics& m, const Config& cfg) {
    json j;
    json phases = json::object();
    for (const auto& [name, pm] : m.phases) {
        json p;
        p["tp"] = pm.counts.tp;
        p["fp"] = pm.counts.fp;
        p["fn"] = pm.counts.fn;
        p["positive"] = pm.counts.tp + pm.counts.fn;
        p["precision"] = pm.precision ? json(*pm.precision) : json(nullptr);
        p["recall"] = pm.recall ? json(*pm.recall) : json(nullptr);
        phases[name] = std::move(p);
    }
    j["phases"] = std::move(phases);
    j["absolute_loss"] = {{"mean", m.loss.mean_abs_loss},
                          {"std", m.loss.abs_loss_std},
                          {"std_mode", "population"}};
    j["config_hash"] = config_hash(cfg);
    j["ground_truth_mode"] =
        cfg.evaluation.use_selected_view_counts ? "selected_view" : "max_views";
    return j;
}

struct DatasetResult {
    std::vector<PlantTimeline> timelines;
    std::vector<PlantRunReport> reports;
    std::optional<DatasetMetrics> metrics;
    int failed_days = 0;
};

// Runs every plant in the manifest (optionally several in parallel),
// evaluates against ground truth when the manifest names one, and writes
// metrics, the audit trail, and a run report.
inline DatasetResult run_dataset(const Manifest& manifest, const Config& cfg,
                                 const RunOptions& opts = {}) {
    namespace fs = std::filesystem;
    cfg.validate();
    const bool persist = !opts.out_dir.empty();
    if (persist) {
        detail::ensure_dir(opts.out_dir);
        detail::write_text(fs::path(opts.out_dir) / "config.json",
                           config_to_json(cfg).dump(2) + "\n");
    }

    DatasetResult result;
    const std::vector<std::string> plants = manifest.plants();
    const int jobs = std::max(1, opts.jobs);

    std::vector<std::pair<PlantTimeline, PlantRunReport>> outputs(plants.size());
    for (std::size_t begin = 0; begin < plants.size();
         begin += static_cast<std::size_t>(jobs)) {
        const std::size_t end =
            std::min(plants.size(), begin + static_cast<std::size_t>(jobs));
        std::vector<std::future<void>> batch;
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, [&, i] {
                PlantRunReport rep;
                PlantTimeline tl = run_plant(manifest, plants[i], cfg, opts, &rep);
                outputs[i] = {std::move(tl), std::move(rep)};
            }));
        }
        for (auto& f : batch) f.get();
    }
    for (auto& [tl, rep] : outputs) {
        result.failed_days += static_cast<int>(rep.skipped_days.size());
        result.timelines.push_back(std::move(tl));
        result.reports.push_back(std::move(rep));
    }

    if (!manifest.ground_truth_path.empty()) {
        std::ifstream in(manifest.resolve(manifest.ground_truth_path));
        json j;
        in >> j;
        const auto truths = ground_truth_from_json(j);
        result.metrics =
            evaluate_timelines(result.timelines, truths, cfg.evaluation);
    }

    if (persist) {
        const fs::path out(opts.out_dir);
        detail::ensure_dir(out / "audit");
        std::string lines;
        for (const auto& tl : result.timelines)
            for (const auto& rec : tl.records)
                for (const auto& a : rec.audit) {
                    json ja = audit_to_json(a);
                    ja["plant"] = rec.plant_id;
                    ja["day"] = rec.day;
                    lines += ja.dump() + "\n";
                }
        detail::write_text(out / "audit" / "audit.jsonl", lines);

        if (result.metrics) {
            detail::ensure_dir(out / "metrics");
            detail::write_text(out / "metrics" / "summary.json",
                               metrics_to_json(*result.metrics, cfg).dump(2) + "\n");
            detail::write_text(out / "metrics" / "per_plant.csv",
                               metrics_csv(*result.metrics));
        }

        json report;
        report["config_hash"] = config_hash(cfg);
        json jplants = json::object();
        for (const auto& rep : result.reports) {
            json jp;
            jp["emergence_day"] =
                rep.emergence_day ? json(*rep.emergence_day) : json(nullptr);
            jp["skipped_days"] = rep.skipped_days;
            jplants[rep.plant_id] = std::move(jp);
        }
        report["plants"] = std::move(jplants);
        report["failed_days"] = result.failed_days;
        detail::write_text(out / "report.json", report.dump(2) + "\n");
    }
    return result;
}

} // namespace leaftrack
