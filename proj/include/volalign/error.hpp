#pragma once

#include <stdexcept>
#include <string>

namespace volalign {

// Base of every error thrown by the library. The category decides how the CLI
// maps a failure onto its exit code.
class Error : public std::runtime_error {
public:
    enum class Category { Input, Numerical };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), m_category(category) {}

    [[nodiscard]] Category category() const noexcept { return m_category; }

private:
    Category m_category;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what) : Error(Category::Input, what) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& what) : Error(Category::Input, what) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(Category::Input, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(Category::Input, what) {}
};

// Zero mass left after thresholding, so the center of mass is undefined.
struct DegenerateVolumeError : Error {
    explicit DegenerateVolumeError(const std::string& what) : Error(Category::Input, what) {}
};

// Argument outside the domain of a map (log at 180 degrees, invalid rotation matrix).
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(Category::Numerical, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(Category::Numerical, what) {}
};

class ConditioningError : public Error {
public:
    ConditioningError(const std::string& what, double final_jitter)
        : Error(Category::Numerical, what), m_final_jitter(final_jitter) {}

    [[nodiscard]] double final_jitter() const noexcept { return m_final_jitter; }

private:
    double m_final_jitter;
};

// A black-box loss returned NaN or Inf.
struct EvaluationError : Error {
    explicit EvaluationError(const std::string& what) : Error(Category::Numerical, what) {}
};

} // namespace volalign
