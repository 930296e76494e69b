#pragma once

namespace wavefield {

// Listener/camera pose. Heading theta is measured CCW from +x in radians,
// phi is elevation above the horizontal plane. The acoustic model uses only
// (x, y, theta); z and phi matter for rendering.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

}  // namespace wavefield
