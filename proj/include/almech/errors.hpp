#ifndef ALMECH_ERRORS_HPP
#define ALMECH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace almech {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A finite-difference stencil or field evaluation produced NaN/Inf.
class NonFiniteEvaluation : public Error {
public:
    explicit NonFiniteEvaluation(const std::string& msg) : Error(msg) {}
};

// Reciprocal condition estimate of a dense solve fell below threshold.
class SingularMatrix : public Error {
public:
    explicit SingularMatrix(const std::string& msg) : Error(msg) {}
};

// The constrained-system regularity matrix is not invertible at the state.
class SingularConstrainedSystem : public Error {
public:
    explicit SingularConstrainedSystem(const std::string& msg) : Error(msg) {}
};

// State violates the constraint beyond the snapping tolerance.
class OffConstraint : public Error {
public:
    explicit OffConstraint(const std::string& msg) : Error(msg) {}
};

// The constraint Jacobian d(phi)/dy lost row rank.
class RankDeficientConstraint : public Error {
public:
    explicit RankDeficientConstraint(const std::string& msg) : Error(msg) {}
};

// Morphism composition with mismatched charts.
class ChartMismatch : public Error {
public:
    explicit ChartMismatch(const std::string& msg) : Error(msg) {}
};

// A verification precondition (e.g. L = L' o Phi) failed; message names it.
class PreconditionFailed : public Error {
public:
    explicit PreconditionFailed(const std::string& msg) : Error(msg) {}
};

// The anchor restricted to the constraint subbundle is not invertible onto TM.
class NotChaplyginType : public Error {
public:
    explicit NotChaplyginType(const std::string& msg) : Error(msg) {}
};

class InvalidParameters : public Error {
public:
    explicit InvalidParameters(const std::string& msg) : Error(msg) {}
};

// Integrator step raised; message carries the time stamp.
class StepFailure : public Error {
public:
    explicit StepFailure(const std::string& msg) : Error(msg) {}
};

// Momentum section not valued in K^D along the trajectory.
class SectionNotInKD : public Error {
public:
    explicit SectionNotInKD(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace almech

#endif
