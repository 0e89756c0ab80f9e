#pragma once

// Checkpoint container:
//   bytes 0..7   magic "MSPLCKPT"
//   bytes 8..15  header length H, uint64 little-endian
//   next H bytes UTF-8 JSON header {format, version, config, seed, epoch, parameters:[{name, shape}]}
//   remainder    each parameter's values as little-endian float64, in declaration order

#include <cstdint>
#include <filesystem>
#include <memory>

#include "mspl/model.hpp"

namespace mspl::model {

struct Checkpoint {
    std::unique_ptr<MsplModel> model;
    std::uint64_t epoch = 0;
};

void save_checkpoint(const MsplModel& model, std::uint64_t epoch, const std::filesystem::path& path);
/// Throws DataError on a malformed or truncated container.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mspl::model
