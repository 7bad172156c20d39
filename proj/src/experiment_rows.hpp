#pragma once

#include <chrono>
#include <string>

#include "loopspace/experiments.hpp"
#include "loopspace/stochastic_calculus.hpp"

namespace loopspace {

// Appends rows to a run, stamping each with the time since the previous row.
class RowRecorder {
public:
  RowRecorder(std::string experiment, RunResult& out);

  void add(const std::string& check, double lhs, double rhs, double se, double z, bool pass);
  void report(const MCReport& r);
  // |lhs - rhs| <= tolerance.
  void close(const std::string& check, double lhs, double rhs, double tolerance);
  void at_most(const std::string& check, double lhs, double bound);
  void at_least(const std::string& check, double lhs, double bound);
  // lo <= lhs <= hi; rhs records the band midpoint.
  void within(const std::string& check, double lhs, double lo, double hi);

private:
  double lap();

  std::string experiment_;
  RunResult& out_;
  std::chrono::steady_clock::time_point start_;
};

std::string format_number(double v);

} // namespace loopspace
