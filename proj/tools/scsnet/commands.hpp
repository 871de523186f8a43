#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <stdexcept>

#include "run_config.hpp"

namespace scsnet {

enum ExitCode : int {
    kOk = 0,
    kFailed = 1,  // ran to completion but a check did not pass
    kConfigError = 2,
    kDataError = 3,
    kCheckpointError = 4,
    kNumericError = 5,
};

/// Dataset directory missing or unusable.
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Invocation {
    RunConfig config;
    std::optional<std::filesystem::path> out;
    bool force = false;
    std::size_t jobs = 1;
};

/// Maps library and CLI exceptions onto the documented exit codes.
int exit_code_for(const std::exception& e);

int cmd_train(const Invocation& inv);
int cmd_eval(const Invocation& inv);
int cmd_attack(const Invocation& inv);
int cmd_saliency(const Invocation& inv);
int cmd_gradcheck(const Invocation& inv);
int cmd_demo1d(const Invocation& inv);

}  // namespace scsnet
