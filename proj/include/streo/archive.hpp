#ifndef STREO_ARCHIVE_HPP_
#define STREO_ARCHIVE_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "streo/models.hpp"

namespace streo {

struct SourceInfo {
  std::string category;  // e.g. "sc_ac" or "arm"
  bool related = false;
  std::map<std::string, double> params;  // task parameters (L, alpha_max, seed, ...)
};

/// Ordered collection of frozen source models over one unified search space.
class SourceArchive {
 public:
  SourceArchive() = default;
  SourceArchive(Representation rep, std::size_t dim) : rep_(rep), dim_(dim) {}

  Representation representation() const { return rep_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return models_.size(); }
  bool empty() const { return models_.empty(); }

  void add(SearchModel model, SourceInfo info) {
    if (model_dim(model) != dim_)
      throw std::invalid_argument("SourceArchive: model dimension " +
                                  std::to_string(model_dim(model)) + " != archive dimension " +
                                  std::to_string(dim_));
    if (model_representation(model) != rep_)
      throw std::invalid_argument("SourceArchive: model representation does not match archive");
    models_.push_back(std::move(model));
    info_.push_back(std::move(info));
  }

  std::uint64_t creation_seed() const { return creation_seed_; }
  void set_creation_seed(std::uint64_t s) { creation_seed_ = s; }

  std::span<const SearchModel> models() const { return models_; }
  const SearchModel& model(std::size_t i) const { return models_.at(i); }
  const SourceInfo& info(std::size_t i) const { return info_.at(i); }
  std::span<const SourceInfo> infos() const { return info_; }

  std::vector<bool> related_flags() const {
    std::vector<bool> out;
    out.reserve(info_.size());
    for (const auto& i : info_) out.push_back(i.related);
    return out;
  }

  /// Archive restricted to `indices`, in the given order.
  SourceArchive subset(std::span<const std::size_t> indices) const {
    SourceArchive out(rep_, dim_);
    out.creation_seed_ = creation_seed_;
    for (auto i : indices) out.add(models_.at(i), info_.at(i));
    return out;
  }

 private:
  Representation rep_ = Representation::binary;
  std::size_t dim_ = 0;
  std::uint64_t creation_seed_ = 0;
  std::vector<SearchModel> models_;
  std::vector<SourceInfo> info_;
};

}  // namespace streo

#endif  // STREO_ARCHIVE_HPP_
