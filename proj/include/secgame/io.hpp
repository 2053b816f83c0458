#ifndef SECGAME_IO_HPP
#define SECGAME_IO_HPP

#include "secgame/scenarios.hpp"

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace secgame {

/// Schema violation in a scenario document; `path()` names the offending key.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

nlohmann::ordered_json scenario_to_json(const Scenario& scenario);

/// Parses and validates a scenario document. Unknown keys, missing keys,
/// wrong types and model invariant violations all raise ValidationError.
Scenario scenario_from_json(const nlohmann::json& doc);

Scenario read_scenario_file(const std::string& path);

/// Builtin name or path to a scenario file.
Scenario load_scenario(const std::string& name_or_path);

/// Shortest decimal text that reads back to the same double; locale-free.
std::string format_number(double value);

/// Header: param,u_*,Q_*_*,lambda_*,EU_*,residual,iters,converged
void write_sweep_csv(std::ostream& os, const SweepResult& result);

/// The sweep schema without the leading param column, one row.
void write_solution_csv(std::ostream& os, const ModelSpec& model, const SolverReport& report);

/// iteration,residual,beta,r
void write_trace_csv(std::ostream& os, const SolverReport& report);

}  // namespace secgame

#endif  // SECGAME_IO_HPP
