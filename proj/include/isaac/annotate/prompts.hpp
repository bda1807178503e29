#pragma once

#include <span>
#include <string>
#include <vector>

#include "isaac/annotate/backend.hpp"
#include "isaac/core/schema.hpp"

namespace isaac::annotate {

inline constexpr int kPromptVersion = 1;

std::string research_prompt(const BookRef& book);
std::string summary_prompt(const std::string& summary, std::span<const Dimension* const> dims);
std::string comments_prompt(std::span<const std::string> comments, std::span<const Dimension* const> dims);
std::string note_prompt(const std::string& note, std::span<const Dimension* const> dims);

}  // namespace isaac::annotate
