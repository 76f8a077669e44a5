#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "actrec/cli/run_config.hpp"
#include "actrec/data/feature_sequence.hpp"

namespace actrec::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitTraining = 4,
  kExitCheckpoint = 5,
  kExitStream = 6,
};

/// Maps an exception category to the process exit code.
int exit_code_for(const std::exception& e);

/// Entry point shared by the executable and the tests. Machine-readable
/// output goes to `out`, progress and summaries to `err`.
/// `in` feeds `stream --input -`.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

/// Feature extraction for one clip directory: image files (*.pgm, *.ppm,
/// *.pnm) in name order, optional crops.json. Frames are keyframe-sampled,
/// cropped when detections exist, and passed to the toy extractor.
data::FeatureSequence extract_clip(const std::filesystem::path& clip_dir, const ExtractOptions& options);

}  // namespace actrec::cli
