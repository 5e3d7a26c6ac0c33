#pragma once

#include <string>

#include "ipdmeta/pooling.hpp"

namespace ipdmeta {

// Deterministic forest-plot renderers: same input, same bytes. The text
// form is fixed-width ASCII; the SVG is a hand-emitted static template
// with per-trial squares whose area is proportional to weight and a
// pooled summary diamond.
std::string render_forest_text(const ForestData& forest);
std::string render_forest_svg(const ForestData& forest);

}  // namespace ipdmeta
