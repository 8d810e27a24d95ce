#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ssid/armax.hpp"
#include "ssid/dataset.hpp"
#include "ssid/experiment.hpp"
#include "ssid/identify.hpp"
#include "ssid/imputer.hpp"

namespace ssid {

/// Dataset table: header `t,u1,...,uM,y[,imputed,posterior_std]`, one row
/// per sampling instant, missing outputs encoded as an empty y field.
Dataset read_dataset_csv(const std::string& path);
Dataset read_dataset_csv_stream(std::istream& in, const std::string& name);
void write_dataset_csv(const Dataset& data, const std::string& path,
                       const std::vector<double>* posterior_std = nullptr);
std::string dataset_csv_string(const Dataset& data,
                               const std::vector<double>* posterior_std = nullptr);

/// Flat polynomial table `poly,index,coefficient` with polys a, c, b1..bM
/// and a noise_std row.
void write_model_csv(const ArmaxModel& model, const std::string& path);
ArmaxModel read_model_csv(const std::string& path);

/// Coefficient table `channel,lag,coefficient` (channels u1..uM, y) behind
/// a comment block carrying the fitted hyperparameters.
void write_predictor_csv(const PredictorModel& model, const std::string& path);
PredictorModel read_predictor_csv(const std::string& path);

/// Fit report with beta, lambda, phi, varphi, J, n_observed, n_missing
/// and the condition estimate of the solved system.
std::string fit_report_json(const ImputationResult& result, int n_observed, int n_missing);

/// Flat `key value` configuration mirroring ExperimentConfig field names
/// (nested structs via dotted keys, e.g. search.beta_grid). '#' starts a
/// comment. When the variant is resonant and pole_radius is not given
/// explicitly it defaults to 0.999.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig read_experiment_config(const std::string& path);

} // namespace ssid
