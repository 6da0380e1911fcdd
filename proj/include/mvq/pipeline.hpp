#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mvq/annulus.hpp"
#include "mvq/coaptation.hpp"
#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/height_field.hpp"
#include "mvq/landmarks.hpp"
#include "mvq/marching_cubes.hpp"
#include "mvq/mesh.hpp"
#include "mvq/morphometry.hpp"
#include "mvq/smoothing.hpp"
#include "mvq/volume.hpp"

namespace mvq {

enum class AnalysisStage { kRefinement, kLandmarks, kCoaptation, kQuantification };

inline const char* stage_name(AnalysisStage stage) {
    switch (stage) {
        case AnalysisStage::kRefinement: return "refinement";
        case AnalysisStage::kLandmarks: return "landmarks";
        case AnalysisStage::kCoaptation: return "coaptation";
        case AnalysisStage::kQuantification: return "quantification";
    }
    return "unknown";
}

struct AnalysisConfig {
    double theta_offset_deg = 15.0;
    double tube_radius = 1.0;
    double grid_resolution = 0.5;
    double epsilon = 0.001;
    int smoothing_iterations = 20;
    double smoothing_passband = 0.1;
    bool snap_pam = false;
    /// Re-expresses the scanner world frame; applied to every extracted
    /// surface so all downstream coordinates live in the transformed frame.
    std::optional<RigidTransform> world_transform;
};

struct StageTiming {
    double refinement_s = 0, landmarks_s = 0, coaptation_s = 0, quantification_s = 0;
    double total_s = 0;
};

struct LeafletMetrics {
    bool present = false;
    double length_mm = 0, area_mm2 = 0;
    double height_min_mm = 0, height_max_mm = 0, height_mean_mm = 0;
};

struct AnalysisReport {
    double d_cc_mm = 0, d_ap_mm = 0;
    double height_mm = 0, length_mm = 0, area_mm2 = 0;
    LeafletMetrics anterior, posterior;
    AnnularLandmarks landmarks;
    bool has_landmarks = false;
    LeafletTips tips;
    bool has_tips = false;
    CoaptationCurve coaptation;
    CoaptationCandidates candidates;
    bool has_coaptation = false;
    bool has_annulus_metrics = false;
    StageTiming timing;

    ValveFrame frame;
    AnnulusRefinement refinement;
    TriangleMesh annulus_mesh, anterior_mesh, posterior_mesh;
    HeightField anterior_surface, posterior_surface;
    OrificeSurface orifice;
};

/// Stage-tagged pipeline failure; carries whatever the pipeline had computed
/// by the time the stage failed, so callers can emit a partial report.
class StageError : public std::runtime_error {
public:
    StageError(AnalysisStage stage, const std::string& message, AnalysisReport partial = {})
        : std::runtime_error(message),
          stage_(stage),
          partial_(std::make_shared<AnalysisReport>(std::move(partial))) {}
    AnalysisStage stage() const { return stage_; }
    const AnalysisReport& partial() const { return *partial_; }

private:
    AnalysisStage stage_;
    std::shared_ptr<AnalysisReport> partial_;
};

/// Full analysis of a labeled mask. Throws StageError on failure; the error
/// carries a partial report (a missing leaflet fails the coaptation stage but
/// the annulus and remaining leaflet are still quantified).
inline AnalysisReport analyze_volume(const LabeledVolume& volume, const AnalysisConfig& config = {}) {
    using Clock = std::chrono::steady_clock;
    auto seconds_since = [](Clock::time_point start) {
        return std::chrono::duration<double>(Clock::now() - start).count();
    };
    const auto t_total = Clock::now();

    AnalysisReport report;
    const auto census = label_census(volume);
    auto voxels = [&](std::uint8_t label) {
        const auto it = census.find(label);
        return it == census.end() ? std::size_t{0} : it->second;
    };
    const bool has_anterior = voxels(2) > 0;
    const bool has_posterior = voxels(3) > 0;

    auto t_stage = Clock::now();
    try {
        if (voxels(1) == 0) throw std::runtime_error("volume contains no annulus voxels (label 1)");
        if (!has_anterior && !has_posterior)
            throw std::runtime_error("volume contains no leaflet voxels to orient the annular normal");

        auto prepare = [&](std::uint8_t label) {
            TriangleMesh mesh = extract_surface(volume, label);
            mesh = smooth_windowed_sinc(mesh, config.smoothing_iterations, config.smoothing_passband);
            if (config.world_transform) mesh = transformed(mesh, *config.world_transform);
            return mesh;
        };
        report.annulus_mesh = prepare(1);
        if (has_anterior) report.anterior_mesh = prepare(2);
        if (has_posterior) report.posterior_mesh = prepare(3);

        std::vector<TriangleMesh> leaflets;
        if (has_anterior) leaflets.push_back(report.anterior_mesh);
        if (has_posterior) leaflets.push_back(report.posterior_mesh);
        report.frame = orient_normal(fit_valve_frame(report.annulus_mesh.vertices), leaflets);

        // First pass pins the landmarks; the radial axis is then re-anchored
        // to the in-plane SH->PAM direction so section placement depends on
        // the data, not on the eigensolver's sign conventions.
        const AnnulusRefinement first_pass = refine_annulus(
            report.annulus_mesh, report.frame, config.theta_offset_deg, config.tube_radius);
        const AnnularLandmarks coarse =
            detect_annular_landmarks(first_pass.curve, report.frame, config.snap_pam);
        Vec3 axis = coarse.pam - coarse.sh;
        axis = axis - report.frame.n * dot(axis, report.frame.n);
        if (norm(axis) > 1e-9) {
            report.frame.r = normalized(axis);
            report.refinement = refine_annulus(report.annulus_mesh, report.frame,
                                               config.theta_offset_deg, config.tube_radius);
        } else {
            report.refinement = first_pass;
        }
    } catch (const std::exception& e) {
        report.timing.refinement_s = seconds_since(t_stage);
        report.timing.total_s = seconds_since(t_total);
        throw StageError(AnalysisStage::kRefinement, e.what(), std::move(report));
    }
    report.timing.refinement_s = seconds_since(t_stage);

    // Annulus-only quantities need just the curve and frame; computing them
    // eagerly keeps them available in partial reports for later failures.
    auto annulus_metrics = [&]() {
        if (report.has_annulus_metrics) return;
        report.length_mm = annular_length(report.refinement.curve);
        report.height_mm = annular_height(report.refinement.curve, report.frame);
        if (report.has_landmarks) {
            const auto [d_ap, d_cc] = annular_diameters(report.landmarks);
            report.d_ap_mm = d_ap;
            report.d_cc_mm = d_cc;
        }
        report.has_annulus_metrics = true;
    };

    t_stage = Clock::now();
    try {
        report.landmarks =
            detect_annular_landmarks(report.refinement.curve, report.frame, config.snap_pam);
        report.has_landmarks = true;
        const TriangleMesh& tip_anterior = has_anterior ? report.anterior_mesh : report.posterior_mesh;
        const TriangleMesh& tip_posterior = has_posterior ? report.posterior_mesh : report.anterior_mesh;
        report.tips = detect_leaflet_tips(tip_anterior, tip_posterior, report.landmarks, report.frame);
        report.has_tips = true;
    } catch (const std::exception& e) {
        report.timing.landmarks_s = seconds_since(t_stage);
        try {
            annulus_metrics();
        } catch (...) {
        }
        report.timing.total_s = seconds_since(t_total);
        throw StageError(AnalysisStage::kLandmarks, e.what(), std::move(report));
    }
    report.timing.landmarks_s = seconds_since(t_stage);

    // Shared grid so the leaflet surfaces, orifice surface, and candidate
    // search all sample the same nodes.
    GridSpec grid;
    bool have_grid = false;
    bool coaptation_failed = false;
    std::string coaptation_error;
    t_stage = Clock::now();
    try {
        std::vector<Vec3> grid_points;
        const double total = report.refinement.curve.total_length();
        for (int i = 0; i < 256; ++i)
            grid_points.push_back(report.refinement.curve.sample_at_arc_length(total * i / 256.0));
        if (has_anterior)
            grid_points.insert(grid_points.end(), report.anterior_mesh.vertices.begin(),
                               report.anterior_mesh.vertices.end());
        if (has_posterior)
            grid_points.insert(grid_points.end(), report.posterior_mesh.vertices.begin(),
                               report.posterior_mesh.vertices.end());
        grid = make_grid(report.frame, grid_points, config.grid_resolution,
                         2.0 * config.grid_resolution);
        have_grid = true;

        if (has_anterior)
            report.anterior_surface = fit_middle_surface(report.anterior_mesh, report.frame,
                                                         config.grid_resolution, -1.0, &grid);
        if (has_posterior)
            report.posterior_surface = fit_middle_surface(report.posterior_mesh, report.frame,
                                                          config.grid_resolution, -1.0, &grid);
        if (!has_anterior || !has_posterior)
            throw std::runtime_error(std::string("coaptation requires both leaflets; missing ") +
                                     (has_anterior ? "posterior (label 3)" : "anterior (label 2)"));
        report.candidates = find_coaptation_candidates(report.anterior_surface,
                                                       report.posterior_surface, config.epsilon);
        report.coaptation =
            fit_coaptation_line(report.candidates.points, report.landmarks, report.frame);
        report.has_coaptation = true;
    } catch (const std::exception& e) {
        coaptation_failed = true;
        coaptation_error = e.what();
    }
    report.timing.coaptation_s = seconds_since(t_stage);

    t_stage = Clock::now();
    try {
        annulus_metrics();
        report.orifice = orifice_surface(report.refinement.curve, report.frame,
                                         config.grid_resolution, have_grid ? &grid : nullptr);
        report.area_mm2 = report.orifice.area_mm2;

        auto quantify = [&](LeafletMetrics& metrics, const HeightField& surface, const Vec3& anchor,
                            const Vec3& tip) {
            metrics.present = true;
            metrics.area_mm2 = leaflet_area(surface);
            metrics.length_mm =
                leaflet_length(surface, report.tips.plane_point, report.tips.plane_normal, anchor, tip);
            SignedFieldSummary stats;
            leaflet_height_field(surface, report.orifice.field, &stats);
            metrics.height_min_mm = stats.min;
            metrics.height_max_mm = stats.max;
            metrics.height_mean_mm = stats.mean;
        };
        if (has_anterior && !report.anterior_surface.values.empty())
            quantify(report.anterior, report.anterior_surface, report.landmarks.sh,
                     report.tips.anterior_tip);
        if (has_posterior && !report.posterior_surface.values.empty())
            quantify(report.posterior, report.posterior_surface, report.landmarks.pam,
                     report.tips.posterior_tip);
    } catch (const std::exception& e) {
        report.timing.quantification_s = seconds_since(t_stage);
        report.timing.total_s = seconds_since(t_total);
        throw StageError(AnalysisStage::kQuantification, e.what(), std::move(report));
    }
    report.timing.quantification_s = seconds_since(t_stage);
    report.timing.total_s = seconds_since(t_total);

    if (coaptation_failed)
        throw StageError(AnalysisStage::kCoaptation, coaptation_error, std::move(report));
    return report;
}

}  // namespace mvq
