#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spam {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidSpec : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct InvalidDensity : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };
struct UndefinedScore : Error { using Error::Error; };
struct UnknownParameter : Error { using Error::Error; };
struct IncomparableConfigs : Error { using Error::Error; };

/// Carries every invalid field found during validation, not just the first.
struct ConfigError : Error {
    explicit ConfigError(std::vector<std::string> found)
        : Error(join(found)), issues(std::move(found)) {}

    std::vector<std::string> issues;

private:
    static std::string join(const std::vector<std::string>& xs) {
        std::string out = "invalid config:";
        for (const auto& x : xs) {
            out += "\n  - ";
            out += x;
        }
        return out;
    }
};

struct NonFiniteAbort : Error {
    NonFiniteAbort(const std::string& what, long long at_step)
        : Error(what + " at step " + std::to_string(at_step)), step(at_step) {}

    long long step;
};

}  // namespace spam
