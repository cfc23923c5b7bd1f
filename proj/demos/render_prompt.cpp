// Print the exact rating prompt sent to a scoring model for one aspect.
// Usage: demo_render_prompt [aspect] (default Holistic)

#include <iostream>

#include "raterlab/raterlab.hpp"

int main(int argc, char** argv) {
    const std::string aspect = argc > 1 ? argv[1] : "Holistic";
    const std::string essay =
        "I think club activity is good for student. We can learn teamwork "
        "and make many friend there.";
    try {
        raterlab::PromptSpec spec = raterlab::render_prompt(aspect, essay);
        std::cout << "template: " << spec.template_id << "\n---\n"
                  << spec.rendered_text << "\n";
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
