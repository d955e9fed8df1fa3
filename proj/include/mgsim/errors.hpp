#pragma once

#include <stdexcept>
#include <string>

namespace mgsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration or a violated parameter invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Communication graph does not satisfy an operation's precondition.
class GraphError : public Error {
public:
    using Error::Error;
};

/// Network solve did not reach tolerance (typically an infeasible load).
class PlantConvergenceError : public Error {
public:
    using Error::Error;
};

/// PCC voltage iterate went to zero.
class PlantCollapseError : public Error {
public:
    using Error::Error;
};

/// Consensus hit max_rounds without every node halting.
class ConsensusError : public Error {
public:
    using Error::Error;
};

/// Ratio-consensus denominator became non-positive.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class NotSteadyError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mgsim
