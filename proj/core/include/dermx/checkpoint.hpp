#ifndef DERMX_CHECKPOINT_HPP
#define DERMX_CHECKPOINT_HPP

#include <filesystem>
#include <memory>

#include "dermx/model.hpp"

namespace dermx {

// Self-describing container: JSON header (format version, model kind, config,
// class name lists, tensor directory) followed by raw little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, DermXModel& model);
std::unique_ptr<DermXModel> load_checkpoint(const std::filesystem::path& path);

// Backbone weights for `pretrained: true`: looks for
// $DERMXKIT_CACHE/<backbone-id>.ckpt and copies backbone.* tensors by name.
void load_pretrained_backbone(DermXModel& model);

}  // namespace dermx

#endif  // DERMX_CHECKPOINT_HPP
