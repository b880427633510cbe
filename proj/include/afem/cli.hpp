#pragma once

namespace afem {

/// Entry point of the fracture-afem executable. Returns 0 on success, 2 on
/// usage or configuration errors and 1 on runtime failures.
int cli_main(int argc, char** argv);

} // namespace afem
