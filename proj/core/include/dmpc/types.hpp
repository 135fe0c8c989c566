#pragma once

#include <stdexcept>
#include <string>

namespace dmpc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model loading / validation
struct SchemaError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct ConventionError : Error {
  using Error::Error;
};
struct MissingNeighborError : Error {
  using Error::Error;
};

// Solver layer
struct AsymmetryError : Error {
  using Error::Error;
};
struct SolverFailure : Error {
  using Error::Error;
};

// Synthesis / OCP layer
struct SynthesisInfeasible : Error {
  using Error::Error;
};
struct IngredientMismatchError : Error {
  using Error::Error;
};
struct NoIncumbentError : Error {
  using Error::Error;
};

// ADMM / simulation layer
struct StepSizeError : Error {
  using Error::Error;
};
struct BudgetTooSmall : Error {
  using Error::Error;
};

struct LocalInfeasible : Error {
  int subsystem;
  explicit LocalInfeasible(int i, const std::string& what)
      : Error(what), subsystem(i) {}
};

struct InfeasibleAtStep : Error {
  int step;
  explicit InfeasibleAtStep(int t, const std::string& what)
      : Error(what), step(t) {}
};

}  // namespace dmpc
