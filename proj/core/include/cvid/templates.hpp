#pragma once

#include <string>
#include <string_view>

namespace cvid {

// Request templates for the pluggable text-generation client. Each carries
// one "{the input user prompt}" slot.
std::string_view story_planner_template();
std::string_view recaptioner_template();
std::string_view region_planner_template();

// Substitutes the input slot; the rest of the template is untouched.
std::string render_template(std::string_view tmpl, std::string_view input);

// Temporal decomposition request: the story plus its frame budget.
std::string render_story_request(std::string_view story, int total_frames);

// Spatial decomposition request for one segment prompt.
std::string render_region_request(std::string_view segment_prompt);

// Recaption request for one clip caption.
std::string build_recaption_request(std::string_view original_caption);

}  // namespace cvid
