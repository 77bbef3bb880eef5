#pragma once

#include <string>
#include <vector>

#include "camo/box.hpp"
#include "camo/image.hpp"

namespace camo {

struct Sample {
  std::string id;
  std::string source_id;  // original image the sample was cut from
  Image image;
  std::vector<Annotation> annotations;
};

struct Dataset {
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
};

std::vector<Annotation> annotations_of_class(const Sample& sample, int class_id);

/// Number of annotations of `class_id` over the whole dataset.
std::size_t count_objects(const Dataset& dataset, int class_id);

/// Keeps only samples carrying at least one annotation of `class_id`.
Dataset filter_with_class(const Dataset& dataset, int class_id);

}  // namespace camo
