#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ptilab/dataset.hpp"
#include "ptilab/denoiser.hpp"
#include "ptilab/editor.hpp"
#include "ptilab/schedule.hpp"

namespace ptilab {

struct DatasetConfig {
    enum class Kind { mixture, shapes };

    Kind kind = Kind::mixture;
    // mixture
    std::size_t num_classes = 4;
    std::size_t dim = 2;
    double sigma = 0.15;
    double radius = 1.0;
    // shapes
    int jitter = 1;

    std::size_t train_size = 10000;
    /// Inputs per experiment cell.
    std::size_t test_size = 64;
};

struct ScheduleConfig {
    int train_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

struct DdimConfig {
    int steps = 50;
    double ratio = 0.8;
};

struct ModelConfig {
    std::size_t hidden = 128;
    std::size_t cond_dim = 16;
};

struct ExperimentConfig {
    std::vector<double> grid_omegas_enc{0.0, 1.0, 2.5, 5.0};
    std::vector<double> grid_omegas_dec{0.0, 1.0, 2.5, 5.0, 7.5};
    std::vector<std::string> bench_methods{"ddim", "nti", "pti"};
    std::vector<int> bench_iterations{1, 2, 3, 4, 5};
    std::vector<double> bench_betas{0.01, 0.1};
    std::vector<double> tradeoff_etas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    /// Stage-1 learning rates for the tradeoff beta ablation.
    std::vector<double> tradeoff_betas{};
};

/// Everything a run depends on. Parsed from JSON; missing keys keep their
/// defaults, unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 0;
    DatasetConfig dataset;
    ScheduleConfig schedule;
    DdimConfig ddim;
    ModelConfig model;
    TrainConfig train;
    PtiConfig pti;
    EditConfig edit;
    ExperimentConfig experiments;
    std::string output_dir = "out";

    /// Throws ConfigError when any value violates a module precondition.
    void validate() const;
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON (sorted keys, every field present).
std::string to_json_string(const RunConfig& cfg);
/// FNV-1a of the canonical JSON, excluding output_dir.
std::uint64_t config_hash(const RunConfig& cfg);

/// Independent generator streams derived from the root seed.
enum class SeedStream : std::uint64_t {
    train_data = 1,
    training = 2,
    test_set = 3,
    edit_inputs = 4,
};
Rng make_rng(const RunConfig& cfg, SeedStream stream);

MixtureSpec mixture_spec(const RunConfig& cfg);
ShapeSpec shape_spec(const RunConfig& cfg);
ModelDims model_dims(const RunConfig& cfg);
NoiseSchedule make_schedule(const RunConfig& cfg);
DdimSteps make_ddim_steps(const RunConfig& cfg);

/// Training data for the configured dataset (train_size samples).
Dataset make_train_data(const RunConfig& cfg);
/// Reconstruction test set (test_size samples, all classes).
Dataset make_test_set(const RunConfig& cfg);
/// Editing inputs: test_size samples of the source class.
std::vector<Vec> make_edit_inputs(const RunConfig& cfg);

}  // namespace ptilab
