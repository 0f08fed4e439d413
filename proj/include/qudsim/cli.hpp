#pragma once

namespace qudsim::cli {

// Exit codes: 0 success, 1 usage/config error, 2 missing prerequisite
// artifact, 3 backend failure (transport, replay miss, unparseable LLM
// output after repair).
int run(int argc, const char* const* argv);

}  // namespace qudsim::cli
