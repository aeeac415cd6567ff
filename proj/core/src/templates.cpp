#include "cvid/templates.hpp"

#include "cvid/error.hpp"

namespace cvid {

namespace {

constexpr std::string_view kSlot = "{the input user prompt}";

constexpr std::string_view kStoryPlanner =
    "# Your Role: Excellent Story Planner\n"
    "\n"
    "## Objective: Analyze your input descriptions and plan a reasonable story by providing the frame-specific prompt.\n"
    "\n"
    "## Process Steps\n"
    "1. Read the user input story with his given total frames.\n"
    "2. Analyze the story, and specify every object and its attribute.\n"
    "3. Crafting a video timeline with a prompt and its corresponding frame index, Keep the frame index an integer multiple of 8.\n"
    "4. Explain your understanding (reasoning) and then format your result as examples.\n"
    "\n"
    "## Examples\n"
    "\n"
    "- Example 1\n"
    "    User prompt: I would like to create a story about a man in a cafe. He first drinks coffee alone on a wooden table, and then a young lady with blonde hair comes to company. They started chatting joyfully at the end. Total frames: 80\n"
    "    Reasoning: This story contains three main objects: a man, a wooden table, and a young lady with blonde hair. We can split the 80 frames into 3 different parts to construct a story.\n"
    "    Output: ['0': \"A man is drinking coffee on a wooden table\", \"32\": \"A man and a young lady with blonde hair are drinking coffee on a wooden table\", \"64\": \"A man and a young lady with blonde hair are drinking coffee and chatting joyfully on a wooden table\"]\n"
    "- Example 2:\n"
    "    ......\n"
    "\n"
    "Your Current Task: Follow the steps closely and accurately identify frame index specific sub-prompts based on the given story and total frames. Ensure adherence to the above output format.\n"
    "\n"
    "User prompt: {the input user prompt}\n"
    "Reasoning: \n";

constexpr std::string_view kRecaptioner =
    "# Your Role: Excellent Prompt Recaptioner\n"
    "You are an excellent recaptioning bot. Your task is to recaption each given prompt with a more descriptive prompt while maintaining the original meaning with at least 40 words. \n"
    "You will be given with an caption of a video, this caption is very short and simple, only containing the main entity and perhaps the simplest description of the background.\n"
    "Please take the provided caption and expand to at least 40 words upon it by providing additional details. You can start this procedure by following these rules:\n"
    "\n"
    "\n"
    "## Objective: Recaption each given prompt with a more descriptive prompt while maintaining the original meaning with at least 40 words. \n"
    "\n"
    "\n"
    "## Process Steps\n"
    "1. If the original prompt contains words about the camera view, such as \"top view of\" or \"camera clockwise\", remember to also contain them in the recaption. \n"
    "2. Describe each entity appearing in this original caption with at least more than two adjectives, making every entity as detailed as possible.\n"
    "3. Using your knowledge to fulfill the background or any other thing that should or should not appear in this frames. Adding as much details as you can to enrich the caption, but you shouldn't change the original meaning of the prompt or any main entity.\n"
    "4. Your recaption should contain at least 40 words, and you should keep it within 60 words.\n"
    "5. Your answer should strictly follow the form : \"Recaption: \"\n"
    "6. Your answer must not contain words like \"video\" or \"frame\". Only enrich the given prompt.\n"
    "\n"
    "## Examples\n"
    "\n"
    "- Example 1:\n"
    "Original Caption: a man and woman are walking down a hallway\n"
    "Recaption: a man and woman in business attire are seen walking down a hallway in a professional building, engaged in a serious discussion with the man holding a book and the woman holding a clipboard, reflecting a professional or academic setting.\n"
    "\n"
    "- Example 2:\n"
    "    ......\n"
    "\n"
    "Your Current Task:  You will be given a caption of a video, this caption is very short and simple, only containing the main entity and perhaps the simplest description of the background. Please take the provided caption and expand it to at least 40 words by providing additional details. \n"
    "\n"
    "Original Caption: {the input user prompt}\n"
    "Recaption: \n";

constexpr std::string_view kRegionPlanner =
    "# Your Role: Excellent Region Planner \n"
    "\n"
    "## Objective: Analyze your input prompts and plan every object's reasonable region in the frame with bounding boxes. \n"
    "\n"
    "## Process Steps\n"
    "1. Analyze the given multi-object prompt, consider a reasonable layout.\n"
    "2. Define square images with top-left at [0, 0] and bottom-right at [1, 1], and the output Box Format: [Top-left x, Top-left y, Width, Height]\n"
    "3. Assign each sub-object to a specific region. You can start by splitting the original image square. \n"
    "4. The corresponding regions do not need to be very specific as long as the region includes the sub-object and all regions never overlap\n"
    "5. Output the result, and present every object and its region with a bounding box.\n"
    "## Examples\n"
    "\n"
    "- Example 1\n"
    "    User prompt: A handsome young man and a lady with blonde hair are drinking coffee on a wooden table.\n"
    "    Output: [\"a handsome young man\": \"[0.5, 0, 0.5, 0.8]\", \"a lady with blonde hair\": \"[0, 0, 0.5, 0.8]\", \"a wooden table\": \"[0, 0.8, 1, 0.2]\"]\n"
    "- Example 2:\n"
    "    ......\n"
    "\n"
    "Your Current Task: Follow the steps closely and accurately output each sub-object's bounding box. Ensure adherence to the above output format.\n"
    "\n"
    "User prompt: {the input user prompt}\n"
    "Output: \n";

}  // namespace

std::string_view story_planner_template() { return kStoryPlanner; }
std::string_view recaptioner_template() { return kRecaptioner; }
std::string_view region_planner_template() { return kRegionPlanner; }

std::string render_template(std::string_view tmpl, std::string_view input) {
    const size_t pos = tmpl.find(kSlot);
    if (pos == std::string_view::npos)
        throw Error::validation("template has no input slot");
    std::string out;
    out.reserve(tmpl.size() + input.size());
    out.append(tmpl.substr(0, pos));
    out.append(input);
    out.append(tmpl.substr(pos + kSlot.size()));
    return out;
}

std::string render_story_request(std::string_view story, int total_frames) {
    if (story.empty()) throw Error::validation("story text must be nonempty");
    std::string input(story);
    input += " Total frames: " + std::to_string(total_frames);
    return render_template(kStoryPlanner, input);
}

std::string render_region_request(std::string_view segment_prompt) {
    if (segment_prompt.empty()) throw Error::validation("segment prompt must be nonempty");
    return render_template(kRegionPlanner, segment_prompt);
}

std::string build_recaption_request(std::string_view original_caption) {
    if (original_caption.empty()) throw Error::validation("caption must be nonempty");
    return render_template(kRecaptioner, original_caption);
}

}  // namespace cvid
