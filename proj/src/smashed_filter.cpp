#include "cdg/smashed_filter.hpp"

#include <iomanip>
#include <ostream>

namespace cdg {

void writeCentersCsv(std::ostream& out, const std::vector<MotionCenter>& centers) {
  out << "frameIndex,x,y,score\n";
  for (const auto& c : centers)
    out << c.frameIndex << ',' << c.x << ',' << c.y << ',' << std::setprecision(10) << c.score
        << std::setprecision(6) << '\n';
}

}  // namespace cdg
