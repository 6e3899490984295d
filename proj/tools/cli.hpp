#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kdisc/error.hpp"
#include "kdisc/transport.hpp"

namespace kdisc::cli {

enum ExitCode : int {
  kOk = 0,
  kParseFailure = 2,
  kValidationFailure = 3,
  kTransportFailure = 4,
  kInternalFailure = 5,
  kRepairExhausted = 6,
};

int exit_code_for(ErrorKind kind);

/// Entry point behind the `kdisc` binary. `args` excludes the program name.
/// `transport` overrides the transport selection of `extract` when non-null.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err,
        ChatTransport* transport = nullptr);

}  // namespace kdisc::cli
