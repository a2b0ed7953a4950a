// Minimal library usage: render one synthetic plant day, run the detection
// chain on it, and print what was found.
#include <cstdio>

#include "leaftrack/pipeline.hpp"
#include "leaftrack/synth.hpp"

int main() {
    using namespace leaftrack;

    SynthSpec spec;
    spec.plant_id = "demo";
    const Config cfg = synth_config();
    const Raster background = synth_background(spec);

    const int day = 15;
    DayInputs inputs;
    inputs.img0 = synth_day_image(spec, day, View::view0);
    inputs.img90 = synth_day_image(spec, day, View::view90);

    const SegmentedDay seg = segment_day(inputs, background, background, cfg);
    const PlantDayRecord rec =
        process_day(spec.plant_id, day, day - spec.emergence_calendar_day + 1,
                    seg, cfg);

    std::printf("day %d, view %d, %d leaves:\n", day,
                rec.chosen_view == View::view90 ? 90 : 0, rec.detected_count());
    for (const auto& leaf : rec.leaves)
        std::printf("  branch (%d,%d) -> tip (%d,%d), %d px\n", leaf.branch->x,
                    leaf.branch->y, leaf.tip->x, leaf.tip->y, leaf.length());
    return 0;
}
