#pragma once

#include <stdexcept>
#include <string>

namespace riccimap {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TopologyError : std::runtime_error {
    explicit TopologyError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateFaceError : std::runtime_error {
    explicit DegenerateFaceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ZeroNormalError : std::runtime_error {
    explicit ZeroNormalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MaxItersExceeded : std::runtime_error {
    explicit MaxItersExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

struct MetricCollapseError : std::runtime_error {
    explicit MetricCollapseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LayoutError : std::runtime_error {
    explicit LayoutError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonConvergedMetricError : std::runtime_error {
    explicit NonConvergedMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateConfigurationError : std::runtime_error {
    explicit DegenerateConfigurationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatchError : std::runtime_error {
    explicit DimensionMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyFootprintError : std::runtime_error {
    explicit EmptyFootprintError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace riccimap
