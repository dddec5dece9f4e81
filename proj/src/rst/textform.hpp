#pragma once

#include <string>

#include "rst/tree.hpp"

namespace rst {

// Human-readable nested form, one tree per line:
//   (Attribution-SN (edu 0 4) (Contrast-NN (edu 4 17) (edu 17 25)))
// Internal nodes carry their label; leaves spell out their boundary span.
// bracketed() and parse_bracketed() round-trip exactly.
std::string bracketed(const DiscourseTree& tree);
DiscourseTree parse_bracketed(const std::string& text);

}  // namespace rst
