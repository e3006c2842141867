#pragma once

namespace multiroi {

/// Entry point of the multiroi_bmd tool. Returns 0 on success, 2 on usage errors,
/// 1 on any other failure (the message names module, operation and context).
int run_cli(int argc, const char* const* argv);

}  // namespace multiroi
