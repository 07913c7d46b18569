#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pinlab/axis.hpp"
#include "pinlab/factors.hpp"
#include "pinlab/ssd.hpp"
#include "pinlab/storage.hpp"

namespace pinlab {

inline constexpr char const* kVersion = "0.1.0";

struct SsdSettings {
    std::filesystem::path vectors;
    std::filesystem::path freq;
    int k = 12;
    int tail_n = 100;
    double a = kSifA;
};

/// Positive-affect stems used for the valence comparison unless overridden.
std::vector<std::string> default_positive_keywords();

struct PipelineConfig {
    std::filesystem::path bank;
    std::map<std::string, std::vector<std::filesystem::path>> logs;  // condition -> log files
    std::filesystem::path out;
    std::uint64_t seed = 0;
    int n_boot = 1000;
    int pa_iterations = 200;
    double pa_percentile = 95.0;
    std::size_t top_n = 80;
    int k_max = 10;
    std::size_t item_axis_min_n = kMinItemAxisModels;
    int jobs = 1;
    std::vector<std::string> positive_keywords = default_positive_keywords();
    std::vector<std::string> negative_keywords;
    std::optional<SsdSettings> ssd;

    FactorOptions factor_options() const;
    /// Canonical JSON rendering; recorded verbatim in the manifest.
    std::string to_json() const;
};

/// JSON config. Paths are resolved against the config file's directory.
PipelineConfig load_pipeline_config(std::filesystem::path const& path);
PipelineConfig parse_pipeline_config(std::string const& text, std::filesystem::path const& base_dir);

// ---------------------------------------------------------------------------
// Stage building blocks, shared by the orchestrator and the CLI.

/// One solution per viable matrix, in input order. `jobs` > 1 solves in parallel;
/// results do not depend on it.
std::vector<FactorSolution> solve_matrices(std::vector<ResponseMatrix> const& matrices, FactorOptions const& options,
                                           int jobs = 1);

struct AxisStage {
    ScoreMatrix score_matrix;
    AxisSolution axis;
    BootstrapResult bootstrap;
    std::optional<PiScores> pi;
    std::optional<ModelScores> specificity;

    std::vector<ModelAxisScore> rows() const;
};

/// Score matrix, PCA (anchored to Pi_m when the table is given) and bootstrap.
AxisStage compute_axis(std::vector<FactorSolution> const& neutral, ResponseTable const* neutral_raw,
                       PinocchioTable const* table, std::uint64_t seed, int n_boot);

struct ConditionComparison {
    ConditionShift shift;
    CorrelationTest rank;
    std::vector<std::pair<std::string, double>> congruence;  // questionnaire -> mean |phi|
    double mean_congruence = kMissing;
    AxisSolution other_axis;
};

/// Compare the reference axis with another condition's solutions.
ConditionComparison compare_conditions(AxisSolution const& reference, std::vector<FactorSolution> const& ref_solutions,
                                       std::vector<FactorSolution> const& other_solutions,
                                       std::string_view other_condition);

struct SsdStage {
    DocumentVectors docs;
    SemanticGradient gradient;
    PoleReport poles;
    std::vector<std::string> missing_loading;
};

/// Neutral primary pattern loadings as targets for the item texts.
SsdStage compute_ssd(std::vector<storage::ItemInfo> const& items, std::vector<FactorSolution> const& neutral,
                     SsdSettings const& settings);

// ---------------------------------------------------------------------------
// Table writers. Each returns the path written.

using Paths = std::vector<std::filesystem::path>;

Paths write_axis_tables(std::filesystem::path const& dir, AxisStage const& stage);
Paths write_pinocchio_tables(std::filesystem::path const& dir, PinocchioTable const& table,
                             std::vector<storage::ItemInfo> const& items);
Paths write_loading_shift(std::filesystem::path const& dir, LoadingShiftReport const& report);
Paths write_clusters(std::filesystem::path const& dir, ClusterReport const& report);
Paths write_item_axis(std::filesystem::path const& dir, std::vector<ItemAxisCorrelation> const& rows,
                      std::vector<storage::ItemInfo> const& items);
Paths write_valence(std::filesystem::path const& dir, ValenceReport const& report);
Paths write_condition_comparison(std::filesystem::path const& dir, ConditionComparison const& cmp,
                                 std::string_view other_condition);
Paths write_ssd(std::filesystem::path const& dir, SsdStage const& stage);

std::map<std::string, std::string> provider_map(std::vector<std::string> const& slugs);

// ---------------------------------------------------------------------------

struct Artifact {
    std::string path;  // relative to the bundle root
    std::string sha256;
    std::string stage;
};

struct StageRecord {
    std::string name;
    std::string status;  // completed, skipped, failed
    std::string note;
};

struct ReportBundle {
    std::filesystem::path root;
    std::vector<Artifact> artifacts;
    std::vector<StageRecord> stages;
    std::filesystem::path manifest;
};

/// Full pipeline. Writes each stage's outputs before starting the next and a
/// manifest.json listing every artifact with its SHA-256. On a stage error the
/// manifest records completed stages and the failure, then the error propagates.
ReportBundle run_pipeline(PipelineConfig const& config);

}  // namespace pinlab
