#pragma once

#include <stdexcept>
#include <string>

namespace mixkin {

// Base of every library error; the kind decides the CLI exit code.
class Error : public std::runtime_error {
public:
    enum class Kind { Config, Shape, Domain, Frame, Solvability, Numerical, Degenerate };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }
    const char* kind_name() const;

private:
    Kind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(Kind::Config, w) {}
};
struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(Kind::Shape, w) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(Kind::Domain, w) {}
};
struct FrameError : Error {
    explicit FrameError(const std::string& w) : Error(Kind::Frame, w) {}
};
struct SolvabilityError : Error {
    explicit SolvabilityError(const std::string& w) : Error(Kind::Solvability, w) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(Kind::Numerical, w) {}
};
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& w) : Error(Kind::Degenerate, w) {}
};

inline const char* Error::kind_name() const {
    switch (kind_) {
    case Kind::Config: return "config";
    case Kind::Shape: return "shape";
    case Kind::Domain: return "domain";
    case Kind::Frame: return "frame";
    case Kind::Solvability: return "solvability";
    case Kind::Numerical: return "numerical";
    case Kind::Degenerate: return "degenerate";
    }
    return "unknown";
}

} // namespace mixkin
