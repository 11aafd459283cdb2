#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustgen/data.hpp"
#include "robustgen/linear.hpp"
#include "robustgen/mlp.hpp"

namespace robustgen {

enum class ExperimentKind { lambda_sweep_linear, dimension_sweep, lambda_sweep_net };

struct SynthSpec {
    std::size_t d = 64;
    std::size_t num_classes = 3;
    std::size_t n_per_class = 1000;
    double mean_scale = 1.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 1;
};

struct IdxPaths {
    std::string train_images, train_labels, test_images, test_labels;
};

struct DataSpec {
    bool synthetic = true;
    SynthSpec synth;
    IdxPaths idx;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::lambda_sweep_linear;
    DataSpec data;
    std::vector<double> epsilon_grid;
    std::vector<double> lambda_grid;  // ignored by dimension_sweep (lambda = 0 there)
    std::size_t runs = 1;
    std::size_t n_train = 1000;
    std::size_t n_test = 2000;
    std::uint64_t base_seed = 0;
    std::size_t workers = 0;  // 0 = hardware concurrency

    TrainConfig train;                 // lr / batch / epochs (epsilon, lambda, seed come per cell)
    std::vector<std::size_t> hidden;   // net sweep architecture (hidden widths)
    std::size_t attack_steps = 10;     // net sweep PGD config
    double attack_step_size = 0.0;
    std::size_t attack_restarts = 1;

    void validate() const;
};

struct ExperimentRow {
    double epsilon = 0.0;
    double param = 0.0;  // lambda, or d for the dimension sweep
    std::size_t run = 0;
    double nat_train = 0.0;
    double nat_test = 0.0;
    double adv_train = 0.0;
    double adv_test = 0.0;
    double gap = 0.0;  // adv_test - adv_train
};

struct CellAggregate {
    double epsilon = 0.0;
    double param = 0.0;
    std::size_t runs = 0;
    double mean_nat_train = 0.0, std_nat_train = 0.0;
    double mean_nat_test = 0.0, std_nat_test = 0.0;
    double mean_adv_train = 0.0, std_adv_train = 0.0;
    double mean_adv_test = 0.0, std_adv_test = 0.0;
    double mean_gap = 0.0, std_gap = 0.0;
};

struct CellError {
    double epsilon = 0.0;
    double param = 0.0;
    std::size_t run = 0;
    std::string message;
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;          // sorted by (epsilon, param, run)
    std::vector<CellAggregate> aggregates;    // derived from rows
    std::vector<CellError> errors;

    bool ok() const { return errors.empty(); }
};

std::vector<CellAggregate> compute_aggregates(const std::vector<ExperimentRow>& rows);

// Runs every (epsilon, param) grid cell `runs` times, each run on a fresh
// deterministic subsample with a fresh training seed. Cells execute on a
// bounded worker pool; a failing run is recorded and the sweep continues.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { csv, json };

// CSV rows under the stable header
//   epsilon,param,run,nat_train,nat_test,adv_train,adv_test,gap
// with shortest-round-trip number formatting, so identical reports emit
// identical bytes. JSON mirrors the rows plus aggregates and errors.
std::string report_to_csv(const ExperimentReport& report);
ExperimentReport report_from_csv(const std::string& text, const std::string& origin = "<csv>");
std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text, const std::string& origin = "<json>");

void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format);

// Flat TOML-like config document: [sections], key = value with strings,
// numbers, booleans and arrays of numbers.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin = "<config>");
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace robustgen
