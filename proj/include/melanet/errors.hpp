#pragma once

#include <stdexcept>
#include <string>

namespace melanet {

// Error categories map 1:1 onto CLI exit codes.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

enum ExitCode {
    exit_ok = 0,
    exit_config_error = 1,
    exit_data_error = 2,
    exit_training_error = 3,
    exit_eval_error = 4,
};

}  // namespace melanet
