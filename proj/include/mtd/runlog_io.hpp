#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "mtd/stream.hpp"

namespace mtd {

// `# mtd-runlog v1`, a `run` record echoing the configuration, one `out`
// record per emitted output with every field flattened, and a closing
// `summary` record with the frame accounting. Numbers are written in shortest
// round-trip form, so a save/load cycle reproduces the log exactly.
void write_runlog(std::ostream& out, const RunLog& log);
RunLog read_runlog(std::istream& in, std::string_view source = "<stream>");
void save_runlog(const std::filesystem::path& path, const RunLog& log);
RunLog load_runlog(const std::filesystem::path& path);

}  // namespace mtd
