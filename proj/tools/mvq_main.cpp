#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvq/mvq.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

json vec_json(const mvq::Vec3& v) { return json::array({v.x, v.y, v.z}); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int exit_code_for(mvq::AnalysisStage stage) {
    switch (stage) {
        case mvq::AnalysisStage::kRefinement: return 3;
        case mvq::AnalysisStage::kLandmarks: return 4;
        case mvq::AnalysisStage::kCoaptation: return 5;
        case mvq::AnalysisStage::kQuantification: return 6;
    }
    return 1;
}

struct AnalyzeOptions {
    std::string input;
    std::string output_dir;
    double theta_offset = 15.0;
    double tube_radius = 1.0;
    double grid_res = 0.5;
    double epsilon = 0.001;
    int smooth_iterations = 20;
    double smooth_passband = 0.1;
    bool snap_pam = false;
    bool length_on_shell = false;
    int label_annulus = 1;
    int label_anterior = 2;
    int label_posterior = 3;
};

struct MetricsOptions {
    std::string path_a, path_b;
    bool dense = false;
    double sample_spacing = 0.2;
};

struct PhantomOptions {
    std::string output;
    std::string truth_path;
    bool analytic_only = false;
    int pad_dims = 0;
    mvq::PhantomParams params;
};

struct CompareOptions {
    std::vector<std::string> reports;
    std::vector<std::string> truths;
};

void remap_labels(mvq::LabeledVolume& volume, int annulus, int anterior, int posterior) {
    if (annulus == 1 && anterior == 2 && posterior == 3) return;
    for (int code : {annulus, anterior, posterior})
        if (code < 1 || code > 3) throw std::runtime_error("label codes must be in 1..3");
    if (annulus == anterior || annulus == posterior || anterior == posterior)
        throw std::runtime_error("label codes must be distinct");
    std::array<std::uint8_t, 4> lut{0, 0, 0, 0};
    lut[annulus] = 1;
    lut[anterior] = 2;
    lut[posterior] = 3;
    for (auto& label : volume.labels) label = lut[label];
}

json census_json(const std::map<std::uint8_t, std::size_t>& census) {
    json j = json::object();
    for (const auto& [label, count] : census) j[std::to_string(label)] = count;
    return j;
}

json analyze_report_json(const mvq::AnalysisReport& report, const AnalyzeOptions& opts,
                         const std::map<std::uint8_t, std::size_t>& census,
                         const char* failed_stage, const std::string& error) {
    const bool has_anterior = census.count(2) && census.at(2) > 0;
    const bool has_posterior = census.count(3) && census.at(3) > 0;
    const bool has_orifice = !report.orifice.field.values.empty();

    json j;
    j["tool"] = "mvq";
    j["version"] = kVersion;
    if (failed_stage) {
        j["failed_stage"] = failed_stage;
        j["error"] = error;
    }

    json annulus;
    annulus["d_cc_mm"] = report.has_landmarks ? json(report.d_cc_mm) : json(nullptr);
    annulus["d_ap_mm"] = report.has_landmarks ? json(report.d_ap_mm) : json(nullptr);
    annulus["height_mm"] = report.has_annulus_metrics ? json(report.height_mm) : json(nullptr);
    annulus["length_mm"] = report.has_annulus_metrics ? json(report.length_mm) : json(nullptr);
    annulus["area_mm2"] = has_orifice ? json(report.area_mm2) : json(nullptr);
    j["annulus"] = annulus;

    auto leaflet_json = [](const mvq::LeafletMetrics& m) -> json {
        if (!m.present) return nullptr;
        json lj;
        lj["length_mm"] = m.length_mm;
        lj["area_mm2"] = m.area_mm2;
        lj["height_min_mm"] = m.height_min_mm;
        lj["height_max_mm"] = m.height_max_mm;
        lj["height_mean_mm"] = m.height_mean_mm;
        return lj;
    };
    j["leaflets"] = json::object();
    j["leaflets"]["anterior"] = leaflet_json(report.anterior);
    j["leaflets"]["posterior"] = leaflet_json(report.posterior);

    if (report.has_landmarks) {
        json lm;
        lm["sh"] = vec_json(report.landmarks.sh);
        lm["pam"] = vec_json(report.landmarks.pam);
        lm["mc"] = vec_json(report.landmarks.mc);
        lm["lc"] = vec_json(report.landmarks.lc);
        if (report.has_tips && has_anterior) lm["anterior_tip"] = vec_json(report.tips.anterior_tip);
        if (report.has_tips && has_posterior) lm["posterior_tip"] = vec_json(report.tips.posterior_tip);
        lm["theta_sh_deg"] = mvq::rad_to_deg(report.landmarks.theta_sh);
        lm["theta_pam_deg"] = mvq::rad_to_deg(report.landmarks.theta_pam);
        lm["theta_mc_deg"] = mvq::rad_to_deg(report.landmarks.theta_mc);
        lm["theta_lc_deg"] = mvq::rad_to_deg(report.landmarks.theta_lc);
        j["landmarks"] = lm;
    } else {
        j["landmarks"] = nullptr;
    }

    if (report.has_coaptation) {
        json c;
        c["v_coefficients"] = report.coaptation.v_coeffs;
        c["h_coefficients"] = report.coaptation.h_coeffs;
        c["rms_mm"] = report.coaptation.rms_mm;
        c["n_points"] = report.coaptation.n_points;
        c["u_min_mm"] = report.coaptation.u_min;
        c["u_max_mm"] = report.coaptation.u_max;
        c["epsilon_mm"] = report.candidates.epsilon;
        j["coaptation"] = c;
    } else {
        j["coaptation"] = nullptr;
    }

    json t;
    t["refinement"] = report.timing.refinement_s;
    t["landmarks"] = report.timing.landmarks_s;
    t["coaptation"] = report.timing.coaptation_s;
    t["quantification"] = report.timing.quantification_s;
    t["total"] = report.timing.total_s;
    j["timing_s"] = t;

    json params;
    params["theta_offset_deg"] = opts.theta_offset;
    params["tube_radius_mm"] = opts.tube_radius;
    params["grid_resolution_mm"] = opts.grid_res;
    params["epsilon_mm"] = opts.epsilon;
    params["smoothing_iterations"] = opts.smooth_iterations;
    params["smoothing_passband"] = opts.smooth_passband;
    params["snap_pam"] = opts.snap_pam;
    params["length_on_shell"] = opts.length_on_shell;
    params["labels"] = {{"annulus", opts.label_annulus},
                        {"anterior", opts.label_anterior},
                        {"posterior", opts.label_posterior}};
    json prov;
    prov["input"] = opts.input;
    prov["parameters"] = params;
    prov["label_census"] = census_json(census);
    j["provenance"] = prov;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const std::size_t written = std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
    if (written != text.size()) throw std::runtime_error("short write: " + path);
}

void write_landmarks_csv(const mvq::AnalysisReport& report, bool has_anterior, bool has_posterior,
                         const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    auto row = [&](const char* name, const mvq::Vec3& p) {
        std::fprintf(f, "%s,%.9g,%.9g,%.9g\n", name, p.x, p.y, p.z);
    };
    std::fprintf(f, "name,x,y,z\n");
    row("sh", report.landmarks.sh);
    row("pam", report.landmarks.pam);
    row("mc", report.landmarks.mc);
    row("lc", report.landmarks.lc);
    if (report.has_tips && has_anterior) row("anterior_tip", report.tips.anterior_tip);
    if (report.has_tips && has_posterior) row("posterior_tip", report.tips.posterior_tip);
    std::fclose(f);
}

/// Leaflet middle surface restricted to the orifice overlap, lifted to world
/// space, with the signed height per OBJ vertex in a sidecar CSV.
void write_height_surface(const mvq::HeightField& geometry, const mvq::HeightField& signed_field,
                          const std::string& obj_path, const std::string& csv_path) {
    mvq::TriangleMesh mesh;
    std::vector<double> scalars;
    std::vector<std::int64_t> ids(geometry.values.size(), -1);
    auto vertex = [&](int i, int j) {
        auto& id = ids[geometry.index(i, j)];
        if (id < 0) {
            id = static_cast<std::int64_t>(mesh.vertices.size());
            mesh.vertices.push_back(geometry.node_point(i, j));
            scalars.push_back(signed_field.values[signed_field.index(i, j)]);
        }
        return static_cast<int>(id);
    };
    for (int j = 0; j + 1 < geometry.grid.nv; ++j) {
        for (int i = 0; i + 1 < geometry.grid.nu; ++i) {
            if (!signed_field.masked(i, j) || !signed_field.masked(i + 1, j) ||
                !signed_field.masked(i, j + 1) || !signed_field.masked(i + 1, j + 1))
                continue;
            const int a = vertex(i, j), b = vertex(i + 1, j);
            const int c = vertex(i + 1, j + 1), d = vertex(i, j + 1);
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
        }
    }
    mvq::save_obj(mesh, obj_path);
    std::FILE* f = std::fopen(csv_path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: " + csv_path);
    std::fprintf(f, "value\n");
    for (double s : scalars) std::fprintf(f, "%.9g\n", s);
    std::fclose(f);
}

/// Alternative leaflet length on the thickened shell: half the longest closed
/// section loop of the leaflet mesh in the SH-PAM plane.
double shell_section_length(const mvq::TriangleMesh& mesh, const mvq::LeafletTips& tips) {
    const auto loops = mvq::plane_section(mesh, tips.plane_point, tips.plane_normal);
    if (loops.empty()) throw std::runtime_error("leaflet mesh does not intersect the SH-PAM plane");
    double best = 0.0;
    for (const auto& loop : loops) best = std::max(best, mvq::polyline_length(loop));
    return 0.5 * best;
}

void write_analysis_outputs(const mvq::AnalysisReport& report, bool has_anterior,
                            bool has_posterior, const std::string& dir, const json& doc) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

    write_text(path("report.json"), doc.dump(2) + "\n");
    if (report.has_landmarks)
        write_landmarks_csv(report, has_anterior, has_posterior, path("landmarks.csv"));

    if (!report.annulus_mesh.empty()) mvq::save_obj(report.annulus_mesh, path("annulus_mesh.obj"));
    if (!report.anterior_mesh.empty()) mvq::save_obj(report.anterior_mesh, path("anterior_mesh.obj"));
    if (!report.posterior_mesh.empty())
        mvq::save_obj(report.posterior_mesh, path("posterior_mesh.obj"));
    if (!report.refinement.tube.empty()) mvq::save_obj(report.refinement.tube, path("annulus_tube.obj"));

    if (report.refinement.curve.total_length() > 0) {
        mvq::Polyline3D curve;
        curve.closed = true;
        const double total = report.refinement.curve.total_length();
        for (int i = 0; i < 256; ++i)
            curve.points.push_back(report.refinement.curve.sample_at_arc_length(total * i / 256.0));
        mvq::save_polyline_csv(curve, path("annulus_curve.csv"));

        mvq::Polyline3D centers;
        centers.closed = true;
        centers.points = report.refinement.skeleton.centers;
        mvq::save_polyline_csv(centers, path("skeleton_centers.csv"));
    }

    if (!report.anterior_surface.values.empty())
        mvq::save_height_field_csv(report.anterior_surface, path("anterior_surface.csv"));
    if (!report.posterior_surface.values.empty())
        mvq::save_height_field_csv(report.posterior_surface, path("posterior_surface.csv"));
    if (!report.orifice.field.values.empty())
        mvq::save_height_field_csv(report.orifice.field, path("orifice_surface.csv"));

    auto export_height = [&](const mvq::HeightField& surface, const char* obj_name,
                             const char* csv_name) {
        if (surface.values.empty() || report.orifice.field.values.empty()) return;
        if (!surface.same_grid(report.orifice.field)) return;
        mvq::SignedFieldSummary stats;
        const mvq::HeightField diff = mvq::leaflet_height_field(surface, report.orifice.field, &stats);
        write_height_surface(surface, diff, path(obj_name), path(csv_name));
    };
    export_height(report.anterior_surface, "anterior_height.obj", "anterior_height_values.csv");
    export_height(report.posterior_surface, "posterior_height.obj", "posterior_height_values.csv");

    if (report.has_coaptation)
        mvq::save_polyline_csv(report.coaptation.polyline, path("coaptation_line.csv"));
}

int run_analyze(const AnalyzeOptions& opts) {
    mvq::LabeledVolume volume;
    try {
        volume = mvq::load_mask(opts.input);
        remap_labels(volume, opts.label_annulus, opts.label_anterior, opts.label_posterior);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    const auto census = mvq::label_census(volume);
    const bool has_anterior = census.count(2) && census.at(2) > 0;
    const bool has_posterior = census.count(3) && census.at(3) > 0;

    mvq::AnalysisConfig config;
    config.theta_offset_deg = opts.theta_offset;
    config.tube_radius = opts.tube_radius;
    config.grid_resolution = opts.grid_res;
    config.epsilon = opts.epsilon;
    config.smoothing_iterations = opts.smooth_iterations;
    config.smoothing_passband = opts.smooth_passband;
    config.snap_pam = opts.snap_pam;

    mvq::AnalysisReport report;
    const char* failed_stage = nullptr;
    std::string error;
    int code = 0;
    try {
        report = mvq::analyze_volume(volume, config);
    } catch (const mvq::StageError& e) {
        report = e.partial();
        failed_stage = mvq::stage_name(e.stage());
        error = e.what();
        code = exit_code_for(e.stage());
    }

    if (code == 0 && opts.length_on_shell && report.has_tips) {
        try {
            if (report.anterior.present)
                report.anterior.length_mm = shell_section_length(report.anterior_mesh, report.tips);
            if (report.posterior.present)
                report.posterior.length_mm = shell_section_length(report.posterior_mesh, report.tips);
        } catch (const std::exception& e) {
            failed_stage = mvq::stage_name(mvq::AnalysisStage::kQuantification);
            error = e.what();
            code = exit_code_for(mvq::AnalysisStage::kQuantification);
        }
    }

    const json doc = analyze_report_json(report, opts, census, failed_stage, error);
    try {
        if (!opts.output_dir.empty())
            write_analysis_outputs(report, has_anterior, has_posterior, opts.output_dir, doc);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    std::printf("%s\n", doc.dump(2).c_str());
    if (code != 0) std::fprintf(stderr, "error: stage %s failed: %s\n", failed_stage, error.c_str());
    return code;
}

int run_metrics(const MetricsOptions& opts) {
    const mvq::LabeledVolume a = mvq::load_mask(opts.path_a);
    const mvq::LabeledVolume b = mvq::load_mask(opts.path_b);

    auto label_msd = [&](std::uint8_t label) -> json {
        try {
            const mvq::TriangleMesh ma = mvq::extract_surface(a, label);
            const mvq::TriangleMesh mb = mvq::extract_surface(b, label);
            if (opts.dense)
                return mvq::msd(mvq::dense_surface_samples(ma, opts.sample_spacing),
                                mvq::dense_surface_samples(mb, opts.sample_spacing));
            return mvq::msd(ma, mb);
        } catch (const std::exception&) {
            return nullptr;
        }
    };
    auto label_dice = [&](std::uint8_t label) -> json {
        try {
            return mvq::dice(a, b, label);
        } catch (const std::exception&) {
            return nullptr;
        }
    };

    json j;
    j["a"] = opts.path_a;
    j["b"] = opts.path_b;
    j["dense_sampling"] = opts.dense;
    json per_label = json::object();
    static const char* kNames[3] = {"annulus", "anterior", "posterior"};
    for (std::uint8_t label = 1; label <= 3; ++label) {
        json entry;
        entry["label"] = label;
        entry["dice"] = label_dice(label);
        entry["msd_mm"] = label_msd(label);
        per_label[kNames[label - 1]] = entry;
    }
    j["per_label"] = per_label;

    json complete;
    try {
        complete["dice"] = mvq::dice(a, b, 1, true);
    } catch (const std::exception&) {
        complete["dice"] = nullptr;
    }
    try {
        auto binarize = [](const mvq::LabeledVolume& v) {
            mvq::LabeledVolume out = v;
            for (auto& label : out.labels) label = label != 0 ? 1 : 0;
            return out;
        };
        const mvq::TriangleMesh ma = mvq::extract_surface(binarize(a), 1);
        const mvq::TriangleMesh mb = mvq::extract_surface(binarize(b), 1);
        complete["msd_mm"] = opts.dense
                                 ? mvq::msd(mvq::dense_surface_samples(ma, opts.sample_spacing),
                                            mvq::dense_surface_samples(mb, opts.sample_spacing))
                                 : mvq::msd(ma, mb);
    } catch (const std::exception&) {
        complete["msd_mm"] = nullptr;
    }
    j["complete"] = complete;

    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

json truth_json(const mvq::AnalyticTruth& truth) {
    const auto& p = truth.params;
    json j;
    j["tool"] = "mvq";
    j["version"] = kVersion;
    json params;
    params["d_cc"] = p.d_cc;
    params["d_ap"] = p.d_ap;
    params["h1"] = p.h1;
    params["h2"] = p.h2;
    params["h3"] = p.h3;
    params["tube_radius"] = p.tube_radius;
    params["leaflet_thickness"] = p.leaflet_thickness;
    params["coaptation_offset"] = p.coaptation_offset;
    params["coaptation_dip"] = p.coaptation_dip;
    params["coapt_overlap"] = p.coapt_overlap;
    params["coapt_separation"] = p.coapt_separation;
    params["sag_anterior"] = p.sag_anterior;
    params["sag_posterior"] = p.sag_posterior;
    params["prolapse_bump"] = p.prolapse_bump;
    params["spacing"] = p.spacing;
    params["gap_arc_deg"] = p.gap_arc_deg;
    params["gap_center_deg"] = p.gap_center_deg;
    j["params"] = params;
    j["has_landmarks"] = truth.has_landmarks;

    json annulus;
    annulus["d_cc_mm"] = truth.d_cc;
    annulus["d_ap_mm"] = truth.d_ap;
    annulus["height_mm"] = truth.h_a;
    annulus["length_mm"] = truth.l_a;
    annulus["area_mm2"] = truth.annulus_area;
    j["annulus"] = annulus;

    if (truth.has_landmarks) {
        json leaflets;
        leaflets["anterior"] = {{"length_mm", truth.anterior_length},
                                {"area_mm2", truth.anterior_area}};
        leaflets["posterior"] = {{"length_mm", truth.posterior_length},
                                 {"area_mm2", truth.posterior_area}};
        j["leaflets"] = leaflets;
        j["leaflet_height_max_mm"] = truth.leaflet_height_max;

        json lm;
        lm["sh"] = vec_json(truth.sh);
        lm["pam"] = vec_json(truth.pam);
        lm["mc"] = vec_json(truth.mc);
        lm["lc"] = vec_json(truth.lc);
        lm["anterior_tip"] = vec_json(truth.anterior_tip);
        lm["posterior_tip"] = vec_json(truth.posterior_tip);
        lm["theta_sh_deg"] = mvq::rad_to_deg(truth.theta_sh);
        lm["theta_pam_deg"] = mvq::rad_to_deg(truth.theta_pam);
        lm["theta_mc_deg"] = mvq::rad_to_deg(truth.theta_mc);
        lm["theta_lc_deg"] = mvq::rad_to_deg(truth.theta_lc);
        j["landmarks"] = lm;
    } else {
        j["leaflets"] = nullptr;
        j["leaflet_height_max_mm"] = nullptr;
        j["landmarks"] = nullptr;
    }

    json frame;
    frame["center"] = vec_json(truth.center);
    frame["normal"] = vec_json(truth.normal);
    frame["radial"] = vec_json(truth.radial);
    frame["atrial_direction"] = vec_json(truth.atrial_direction);
    j["frame"] = frame;

    json arc = json::array();
    for (const auto& q : truth.coaptation_arc) arc.push_back(vec_json(q));
    j["coaptation_arc"] = arc;
    json centerline = json::array();
    for (const auto& q : truth.centerline) centerline.push_back(vec_json(q));
    j["centerline"] = centerline;
    return j;
}

int run_phantom(const PhantomOptions& opts) {
    if (opts.analytic_only) {
        const mvq::AnalyticTruth truth = mvq::analytic_measurements(opts.params);
        const std::string path = opts.truth_path.empty() ? "truth.json" : opts.truth_path;
        write_text(path, truth_json(truth).dump(2) + "\n");
        return 0;
    }
    auto [volume, truth] = mvq::generate_phantom(opts.params, opts.pad_dims);
    mvq::save_mask(volume, opts.output);
    if (!opts.truth_path.empty()) write_text(opts.truth_path, truth_json(truth).dump(2) + "\n");
    json summary;
    summary["output"] = opts.output;
    summary["dims"] = volume.dims;
    summary["spacing"] = volume.spacing;
    summary["label_census"] = census_json(mvq::label_census(volume));
    json annulus;
    annulus["d_cc_mm"] = truth.d_cc;
    annulus["d_ap_mm"] = truth.d_ap;
    annulus["height_mm"] = truth.h_a;
    annulus["length_mm"] = truth.l_a;
    annulus["area_mm2"] = truth.annulus_area;
    summary["annulus"] = annulus;
    std::printf("%s\n", summary.dump(2).c_str());
    return 0;
}

std::optional<double> json_number(const json& j, const std::vector<std::string>& path) {
    const json* cur = &j;
    for (const auto& key : path) {
        if (!cur->is_object() || !cur->contains(key)) return std::nullopt;
        cur = &(*cur)[key];
    }
    if (!cur->is_number()) return std::nullopt;
    return cur->get<double>();
}

int run_compare(const CompareOptions& opts) {
    if (opts.reports.size() != opts.truths.size())
        throw std::runtime_error("--report and --truth must be given the same number of times");
    if (opts.reports.empty()) throw std::runtime_error("no report/truth pairs given");

    const std::vector<std::pair<std::string, std::vector<std::string>>> keys = {
        {"d_cc_mm", {"annulus", "d_cc_mm"}},
        {"d_ap_mm", {"annulus", "d_ap_mm"}},
        {"height_mm", {"annulus", "height_mm"}},
        {"length_mm", {"annulus", "length_mm"}},
        {"area_mm2", {"annulus", "area_mm2"}},
        {"anterior_length_mm", {"leaflets", "anterior", "length_mm"}},
        {"anterior_area_mm2", {"leaflets", "anterior", "area_mm2"}},
        {"posterior_length_mm", {"leaflets", "posterior", "length_mm"}},
        {"posterior_area_mm2", {"leaflets", "posterior", "area_mm2"}},
    };

    auto load_json = [](const std::string& path) {
        std::FILE* f = std::fopen(path.c_str(), "rb");
        if (!f) throw std::runtime_error("cannot open: " + path);
        std::string text;
        char buffer[65536];
        std::size_t n;
        while ((n = std::fread(buffer, 1, sizeof buffer, f)) > 0) text.append(buffer, n);
        std::fclose(f);
        return json::parse(text);
    };

    std::map<std::string, std::vector<std::pair<double, double>>> agreement_pairs;
    json pairs = json::array();
    for (std::size_t i = 0; i < opts.reports.size(); ++i) {
        const json report = load_json(opts.reports[i]);
        const json truth = load_json(opts.truths[i]);
        json diffs = json::object();
        for (const auto& [name, path] : keys) {
            const auto measured = json_number(report, path);
            const auto expected = json_number(truth, path);
            if (!measured || !expected) continue;
            json d;
            d["measured"] = *measured;
            d["truth"] = *expected;
            d["difference"] = *measured - *expected;
            diffs[name] = d;
            agreement_pairs[name].push_back({*expected, *measured});
        }
        json entry;
        entry["report"] = opts.reports[i];
        entry["truth"] = opts.truths[i];
        entry["differences"] = diffs;
        pairs.push_back(entry);
    }

    json agreement = json::object();
    for (const auto& [name, samples] : agreement_pairs) {
        const mvq::AgreementStats stats = mvq::bland_altman(samples);
        json s;
        s["bias"] = stats.bias;
        s["loa_low"] = finite_or_null(stats.loa_low);
        s["loa_high"] = finite_or_null(stats.loa_high);
        s["n"] = stats.n;
        agreement[name] = s;
    }

    json j;
    j["pairs"] = pairs;
    j["agreement"] = agreement;
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mitral valve quantification from labeled segmentation masks"};
    app.set_version_flag("--version", std::string("mvq ") + kVersion);
    app.require_subcommand(1);

    AnalyzeOptions analyze_opts;
    CLI::App* analyze = app.add_subcommand("analyze", "Run the full analysis pipeline on a mask");
    analyze->add_option("-i,--input", analyze_opts.input, "Labeled NRRD mask")->required();
    analyze->add_option("-o,--output-dir", analyze_opts.output_dir,
                        "Directory for report.json, meshes, and CSV exports");
    analyze->add_option("--theta-offset", analyze_opts.theta_offset,
                        "Angular step between skeleton sections (degrees)");
    analyze->add_option("--tube-radius", analyze_opts.tube_radius,
                        "Radius of the refined annulus tube (mm)");
    analyze->add_option("--grid-res", analyze_opts.grid_res, "Height-field grid resolution (mm)");
    analyze->add_option("--epsilon", analyze_opts.epsilon,
                        "Initial coaptation height tolerance (mm)");
    analyze->add_option("--smooth-iterations", analyze_opts.smooth_iterations,
                        "Windowed-sinc smoothing iterations");
    analyze->add_option("--smooth-passband", analyze_opts.smooth_passband,
                        "Windowed-sinc passband in (0, 2)");
    analyze->add_flag("--snap-pam", analyze_opts.snap_pam,
                      "Snap PAM to the nearest curvature minimum within 10 degrees");
    analyze->add_flag("--length-on-shell", analyze_opts.length_on_shell,
                      "Measure leaflet lengths on the thickened shell instead of the middle surface");
    analyze->add_option("--annulus-label", analyze_opts.label_annulus, "Input code for the annulus");
    analyze->add_option("--anterior-label", analyze_opts.label_anterior,
                        "Input code for the anterior leaflet");
    analyze->add_option("--posterior-label", analyze_opts.label_posterior,
                        "Input code for the posterior leaflet");

    MetricsOptions metrics_opts;
    CLI::App* metrics = app.add_subcommand("metrics", "Dice and MSD between two masks");
    metrics->add_option("-a,--a", metrics_opts.path_a, "First mask")->required();
    metrics->add_option("-b,--b", metrics_opts.path_b, "Second mask")->required();
    metrics->add_flag("--dense", metrics_opts.dense, "Sample triangle interiors for MSD");
    metrics->add_option("--sample-spacing", metrics_opts.sample_spacing,
                        "Dense sampling spacing (mm)");

    PhantomOptions phantom_opts;
    CLI::App* phantom = app.add_subcommand("phantom", "Generate a synthetic valve mask with truth");
    phantom->add_option("-o,--output", phantom_opts.output, "Output NRRD path");
    phantom->add_option("--truth", phantom_opts.truth_path, "Truth JSON path");
    phantom->add_flag("--analytic-only", phantom_opts.analytic_only,
                      "Write the truth JSON without voxelizing");
    phantom->add_option("--pad-dims", phantom_opts.pad_dims,
                        "Pad the volume to a cube of this many voxels per side");
    phantom->add_option("--d-cc", phantom_opts.params.d_cc, "Inter-commissural diameter (mm)");
    phantom->add_option("--d-ap", phantom_opts.params.d_ap, "Anteroposterior diameter (mm)");
    phantom->add_option("--h1", phantom_opts.params.h1, "Saddle depth coefficient (mm)");
    phantom->add_option("--h2", phantom_opts.params.h2, "Anterior-posterior height bias (mm)");
    phantom->add_option("--h3", phantom_opts.params.h3, "Saddle horn sharpening (mm)");
    phantom->add_option("--tube-radius", phantom_opts.params.tube_radius, "Annulus tube radius (mm)");
    phantom->add_option("--thickness", phantom_opts.params.leaflet_thickness,
                        "Leaflet shell thickness (mm)");
    phantom->add_option("--coapt-offset", phantom_opts.params.coaptation_offset,
                        "Contact line offset toward PAM (fraction)");
    phantom->add_option("--coapt-dip", phantom_opts.params.coaptation_dip,
                        "Contact line dip below the commissures (mm)");
    phantom->add_option("--coapt-overlap", phantom_opts.params.coapt_overlap,
                        "Leaflet overlap band half-width (mm)");
    phantom->add_option("--coapt-separation", phantom_opts.params.coapt_separation,
                        "Sheet separation inside the overlap band (mm)");
    phantom->add_option("--sag-anterior", phantom_opts.params.sag_anterior,
                        "Anterior belly sag (mm)");
    phantom->add_option("--sag-posterior", phantom_opts.params.sag_posterior,
                        "Posterior belly sag (mm)");
    phantom->add_option("--prolapse", phantom_opts.params.prolapse_bump,
                        "Designed anterior prolapse height (mm)");
    phantom->add_option("--spacing", phantom_opts.params.spacing, "Voxel spacing (mm)");
    phantom->add_option("--gap-arc", phantom_opts.params.gap_arc_deg,
                        "Annulus arc to delete (degrees)");
    phantom->add_option("--gap-center", phantom_opts.params.gap_center_deg,
                        "Center of the deleted arc (degrees)");

    CompareOptions compare_opts;
    CLI::App* compare = app.add_subcommand("compare", "Agreement statistics between reports and truths");
    compare->add_option("--report", compare_opts.reports, "Analysis report JSON (repeatable)")
        ->required();
    compare->add_option("--truth", compare_opts.truths, "Truth JSON (repeatable)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*analyze) return run_analyze(analyze_opts);
        if (*metrics) return run_metrics(metrics_opts);
        if (*phantom) {
            if (!phantom_opts.analytic_only && phantom_opts.output.empty())
                throw std::runtime_error("phantom: --output is required unless --analytic-only");
            return run_phantom(phantom_opts);
        }
        if (*compare) return run_compare(compare_opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
