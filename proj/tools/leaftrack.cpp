#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "leaftrack/config.hpp"
#include "leaftrack/manifest.hpp"
#include "leaftrack/overlay.hpp"
#include "leaftrack/pipeline.hpp"
#include "leaftrack/png_io.hpp"
#include "leaftrack/serialize.hpp"
#include "leaftrack/synth.hpp"

namespace fs = std::filesystem;
using namespace leaftrack;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string manifest_path;
    std::string out_dir;
    bool resume = false;
    int jobs = 1;

    Config config() const {
        return config_path.empty() ? Config{} : load_config(config_path);
    }
    Manifest manifest() const {
        if (manifest_path.empty())
            throw std::runtime_error("this command needs --manifest");
        return load_manifest(manifest_path);
    }
    RunOptions run_options() const { return {out_dir, resume, jobs}; }
};

int cmd_segment(const GlobalArgs& g, const std::string& image,
                const std::string& bg, const std::string& out_mask) {
    const Config cfg = g.config();
    const Raster img = read_png(image);
    const Raster background = read_png(bg);
    SegmentationDebug dbg;
    const BinaryMask mask = segment_plant(img, background, cfg.segmentation, &dbg);
    write_mask_png(out_mask, mask);
    std::cout << "mask area " << mask.area() << ", stage1 threshold "
              << dbg.stage1_threshold << ", stage2 threshold "
              << dbg.stage2_threshold << "\n";
    return 0;
}

int cmd_skeletonize(const GlobalArgs&, const std::string& mask_path, int day,
                    const std::string& out_skel) {
    const BinaryMask mask = read_mask_png(mask_path);
    const BinaryMask skel = skeletonize(mask, day);
    write_mask_png(out_skel, skel);
    std::cout << "skeleton pixels " << skel.area() << "\n";
    return 0;
}

int cmd_detect(const GlobalArgs& g, const std::string& plant, int day,
               int days_from_emergence, const std::string& out_record,
               const std::string& out_overlay) {
    const Config cfg = g.config();
    const Manifest manifest = g.manifest();
    DayInputs in;
    const ManifestEntry* e0 = manifest.find(plant, day, 0);
    const ManifestEntry* e90 = manifest.find(plant, day, 90);
    if (!e0 && !e90)
        throw std::runtime_error("no entries for plant " + plant + " day " +
                                 std::to_string(day));
    if (e0) in.img0 = read_png(manifest.resolve(e0->image_path));
    if (e90) in.img90 = read_png(manifest.resolve(e90->image_path));
    Raster bg0 = read_png(manifest.resolve(
        manifest.backgrounds.count(0) ? manifest.backgrounds.at(0)
                                      : manifest.backgrounds.at(90)));
    Raster bg90 = read_png(manifest.resolve(
        manifest.backgrounds.count(90) ? manifest.backgrounds.at(90)
                                       : manifest.backgrounds.at(0)));
    const SegmentedDay seg = segment_day(in, bg0, bg90, cfg);
    const int dse = days_from_emergence > 0 ? days_from_emergence : day;
    const PlantDayRecord rec = process_day(plant, day, dse, seg, cfg);
    std::cout << "view " << (rec.chosen_view == View::view90 ? 90 : 0)
              << ", leaves " << rec.detected_count() << "\n";
    if (!out_record.empty()) {
        std::ofstream out(out_record);
        out << record_to_json(rec).dump(2) << "\n";
    }
    if (!out_overlay.empty()) {
        const Raster& base = rec.chosen_view == View::view90 && in.img90
                                 ? *in.img90
                                 : *in.img0;
        write_png(out_overlay, render_overlay(rec, base));
    }
    return 0;
}

int cmd_run(const GlobalArgs& g) {
    const Config cfg = g.config();
    const Manifest manifest = g.manifest();
    if (g.out_dir.empty()) throw std::runtime_error("run needs --out");
    const DatasetResult result = run_dataset(manifest, cfg, g.run_options());
    std::cout << "plants " << result.timelines.size() << ", failed days "
              << result.failed_days << "\n";
    if (result.metrics) {
        const auto& final = result.metrics->phases.at("final");
        std::cout << "final tp " << final.counts.tp << " fp " << final.counts.fp
                  << " fn " << final.counts.fn;
        if (final.precision) std::cout << " precision " << *final.precision;
        if (final.recall) std::cout << " recall " << *final.recall;
        std::cout << "\nmean abs loss " << result.metrics->loss.mean_abs_loss
                  << " (std " << result.metrics->loss.abs_loss_std << ")\n";
    }
    return result.failed_days > 0 ? 1 : 0;
}

int cmd_reconcile(const GlobalArgs& g, const std::string& detections_dir,
                  const std::string& plant, const std::string& out_file) {
    const Config cfg = g.config();
    PlantTimeline tl;
    tl.plant_id = plant;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(detections_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind(plant + "_day", 0) == 0) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        json j;
        in >> j;
        tl.records.push_back(record_from_json(j));
    }
    if (tl.records.empty())
        throw std::runtime_error("no detection records for plant " + plant +
                                 " in " + detections_dir);
    std::sort(tl.records.begin(), tl.records.end(),
              [](const auto& a, const auto& b) { return a.day < b.day; });
    const PlantTimeline out = reconcile_timeline(tl, cfg.reconcile);
    std::ofstream os(out_file);
    os << timeline_to_json(out).dump(2) << "\n";
    int changes = 0;
    for (std::size_t i = 0; i < out.records.size(); ++i)
        changes += std::abs(out.records[i].detected_count() -
                            tl.records[i].detected_count());
    std::cout << "reconciled " << out.records.size() << " days, " << changes
              << " count adjustments\n";
    return 0;
}

int cmd_evaluate(const GlobalArgs& g, const std::string& timelines_dir,
                 const std::string& truth_path) {
    const Config cfg = g.config();
    std::vector<PlantTimeline> timelines;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(timelines_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        json j;
        in >> j;
        timelines.push_back(timeline_from_json(j));
    }
    std::ifstream tin(truth_path);
    if (!tin) throw std::runtime_error("cannot open " + truth_path);
    json tj;
    tin >> tj;
    const auto truths = ground_truth_from_json(tj);
    const DatasetMetrics metrics =
        evaluate_timelines(timelines, truths, cfg.evaluation);
    std::cout << metrics_to_json(metrics, cfg).dump(2) << "\n";
    if (!g.out_dir.empty()) {
        fs::create_directories(fs::path(g.out_dir) / "metrics");
        std::ofstream mj(fs::path(g.out_dir) / "metrics" / "summary.json");
        mj << metrics_to_json(metrics, cfg).dump(2) << "\n";
        std::ofstream mc(fs::path(g.out_dir) / "metrics" / "per_plant.csv");
        mc << metrics_csv(metrics);
    }
    return 0;
}

int cmd_overlay(const GlobalArgs& g, const std::string& run_dir,
                const std::string& plant, int day, const std::string& out_file) {
    const Manifest manifest = g.manifest();
    char tag[16];
    std::snprintf(tag, sizeof(tag), "day%02d", day);
    const fs::path rec_path =
        fs::path(run_dir) / "detections" / (plant + "_" + tag + ".json");
    std::ifstream in(rec_path);
    if (!in) throw std::runtime_error("no record at " + rec_path.string());
    json j;
    in >> j;
    const PlantDayRecord rec = record_from_json(j);
    const int view = rec.chosen_view == View::view90 ? 90 : 0;
    const ManifestEntry* e = manifest.find(plant, day, view);
    if (!e) throw std::runtime_error("manifest has no image for the chosen view");
    const Raster base = read_png(manifest.resolve(e->image_path));
    write_png(out_file, render_overlay(rec, base));
    return 0;
}

int cmd_synth(const GlobalArgs& g, int plants, int days, unsigned seed) {
    if (g.out_dir.empty()) throw std::runtime_error("synth needs --out");
    fs::create_directories(g.out_dir);
    Manifest m;
    m.root = g.out_dir;
    std::map<std::string, GroundTruth> truths;
    for (int p = 1; p <= plants; ++p) {
        SynthSpec spec;
        spec.seed = seed + static_cast<unsigned>(p - 1);
        char id[32];
        std::snprintf(id, sizeof(id), "plant-%02d", p);
        spec.plant_id = id;
        spec.calendar_days = days;
        for (int day = 1; day <= days; ++day) {
            for (View view : {View::view0, View::view90}) {
                const int v = view == View::view90 ? 90 : 0;
                char name[64];
                std::snprintf(name, sizeof(name), "%s_day%02d_view%d.png", id, day, v);
                write_png((fs::path(g.out_dir) / name).string(),
                          synth_day_image(spec, day, view));
                m.entries.push_back({spec.plant_id, day, v, name});
            }
        }
        truths[spec.plant_id] = synth_ground_truth(spec);
        if (p == 1) {
            write_png((fs::path(g.out_dir) / "background_view0.png").string(),
                      synth_background(spec));
            write_png((fs::path(g.out_dir) / "background_view90.png").string(),
                      synth_background(spec));
        }
    }
    m.backgrounds[0] = "background_view0.png";
    m.backgrounds[90] = "background_view90.png";
    m.ground_truth_path = "ground_truth.json";
    {
        std::ofstream gt(fs::path(g.out_dir) / "ground_truth.json");
        gt << ground_truth_to_json(truths).dump(2) << "\n";
    }
    {
        std::ofstream cj(fs::path(g.out_dir) / "config.json");
        cj << config_to_json(synth_config()).dump(2) << "\n";
    }
    save_manifest(m, (fs::path(g.out_dir) / "manifest.json").string());
    std::cout << "wrote " << plants << " plants x " << days << " days to "
              << g.out_dir << "\n";
    return 0;
}

int cmd_manifest(const GlobalArgs&, const std::string& dir,
                 const std::string& pattern, const std::string& out_file) {
    const Manifest m = pattern.empty() ? scan_manifest(dir) : scan_manifest(dir, pattern);
    save_manifest(m, out_file);
    std::cout << "scanned " << m.entries.size() << " entries from " << dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"maize leaf detection and temporal tracking pipeline"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "pipeline configuration JSON");
    app.add_option("--manifest", g.manifest_path, "dataset manifest JSON");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_flag("--resume", g.resume, "reuse existing per-day outputs");
    app.add_option("--jobs", g.jobs, "plants processed in parallel")
        ->check(CLI::PositiveNumber);

    std::string image, bg, out_mask;
    auto* seg = app.add_subcommand("segment", "two-stage plant segmentation");
    seg->add_option("--image", image)->required();
    seg->add_option("--bg", bg)->required();
    seg->add_option("--out-mask", out_mask)->required();

    std::string mask_path, out_skel;
    int day = 1;
    auto* skel = app.add_subcommand("skeletonize", "day-gated thinning of a mask");
    skel->add_option("--mask", mask_path)->required();
    skel->add_option("--day", day, "days since emergence")->required();
    skel->add_option("--out-skel", out_skel)->required();

    std::string plant, out_record, out_overlay;
    int det_day = 1, det_dse = -1;
    auto* det = app.add_subcommand("detect", "detect leaves for one plant day");
    det->add_option("--plant", plant)->required();
    det->add_option("--day", det_day)->required();
    det->add_option("--days-from-emergence", det_dse,
                    "defaults to --day when omitted");
    det->add_option("--out-record", out_record);
    det->add_option("--out-overlay", out_overlay);

    auto* run = app.add_subcommand("run", "full pipeline over a manifest");

    std::string det_dir, rec_plant, rec_out;
    auto* rec = app.add_subcommand("reconcile", "temporal reconciliation of a plant");
    rec->add_option("--detections-dir", det_dir)->required();
    rec->add_option("--plant", rec_plant)->required();
    rec->add_option("--out-file", rec_out)->required();

    std::string tl_dir, truth_path;
    auto* ev = app.add_subcommand("evaluate", "score timelines against ground truth");
    ev->add_option("--timelines-dir", tl_dir)->required();
    ev->add_option("--truth", truth_path)->required();

    std::string ov_run_dir, ov_plant, ov_out;
    int ov_day = 1;
    auto* ov = app.add_subcommand("overlay", "render a detection overlay");
    ov->add_option("--run-dir", ov_run_dir)->required();
    ov->add_option("--plant", ov_plant)->required();
    ov->add_option("--day", ov_day)->required();
    ov->add_option("--out-file", ov_out)->required();

    int sy_plants = 5, sy_days = 27;
    unsigned sy_seed = 1;
    auto* sy = app.add_subcommand("synth", "generate a synthetic dataset");
    sy->add_option("--plants", sy_plants);
    sy->add_option("--days", sy_days);
    sy->add_option("--seed", sy_seed);

    std::string man_dir, man_pattern, man_out;
    auto* man = app.add_subcommand("manifest", "scan a directory into a manifest");
    man->add_option("--dir", man_dir)->required();
    man->add_option("--pattern", man_pattern,
                    "regex with plant/day/view capture groups");
    man->add_option("--out-file", man_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (seg->parsed()) return cmd_segment(g, image, bg, out_mask);
        if (skel->parsed()) return cmd_skeletonize(g, mask_path, day, out_skel);
        if (det->parsed())
            return cmd_detect(g, plant, det_day, det_dse, out_record, out_overlay);
        if (run->parsed()) return cmd_run(g);
        if (rec->parsed()) return cmd_reconcile(g, det_dir, rec_plant, rec_out);
        if (ev->parsed()) return cmd_evaluate(g, tl_dir, truth_path);
        if (ov->parsed()) return cmd_overlay(g, ov_run_dir, ov_plant, ov_day, ov_out);
        if (sy->parsed()) return cmd_synth(g, sy_plants, sy_days, sy_seed);
        if (man->parsed()) return cmd_manifest(g, man_dir, man_pattern, man_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
