#include "camo/dataset.hpp"

#include <algorithm>

namespace camo {

std::vector<Annotation> annotations_of_class(const Sample& sample, int class_id) {
  std::vector<Annotation> out;
  std::copy_if(sample.annotations.begin(), sample.annotations.end(), std::back_inserter(out),
               [&](const Annotation& a) { return a.class_id == class_id; });
  return out;
}

std::size_t count_objects(const Dataset& dataset, int class_id) {
  std::size_t n = 0;
  for (const Sample& s : dataset.samples) {
    n += std::count_if(s.annotations.begin(), s.annotations.end(),
                       [&](const Annotation& a) { return a.class_id == class_id; });
  }
  return n;
}

Dataset filter_with_class(const Dataset& dataset, int class_id) {
  Dataset out;
  for (const Sample& s : dataset.samples) {
    if (!annotations_of_class(s, class_id).empty()) out.samples.push_back(s);
  }
  return out;
}

}  // namespace camo
