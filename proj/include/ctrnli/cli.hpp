#pragma once

#include <atomic>
#include <ostream>
#include <string>
#include <vector>

namespace ctrnli::cli {

enum ExitCode : int {
  kOk = 0,
  kValidationFailed = 1,  // validate/score: bad data or schema mismatch
  kConfigError = 2,
  kEndpointFailure = 3,
  kPartial = 4,  // some samples failed, or the run was interrupted
};

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. A set `cancel` flag stops runs after in-flight samples.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const std::atomic<bool>* cancel = nullptr);

}  // namespace ctrnli::cli
