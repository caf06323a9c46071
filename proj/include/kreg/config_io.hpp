#pragma once

#include <optional>
#include <string>

#include "kreg/kernels.hpp"
#include "kreg/projection.hpp"
#include "kreg/registration.hpp"
#include "kreg/selector.hpp"

namespace kreg {

/// Per-kind channel kernel settings; the actual per-channel parameter list is
/// assembled against a concrete schema with make_kernel_params.
struct KernelProfile {
  double sigma = 1.0;
  double lengthscale = 0.1;
  ChannelParams color{1.0, 0.15, KernelForm::squared_exponential};
  ChannelParams intensity{1.0, 0.2, KernelForm::squared_exponential};
  ChannelParams semantic{1.0, 0.6, KernelForm::linear};
  ChannelParams custom{1.0, 1.0, KernelForm::squared_exponential};
};

/// Everything a run needs, loaded from one JSON file with sections
/// kernel / registration / selector / camera. Unknown keys are rejected;
/// missing keys fall back to the documented defaults, except the camera
/// fields fx/fy/cx/cy/depth_scale which are required when the section is
/// present. Out-of-range values raise std::invalid_argument naming the bound.
struct RunProfile {
  KernelProfile kernel;
  RegistrationConfig registration;
  SelectorConfig selector;
  std::optional<CameraIntrinsics> camera;
};

RunProfile load_config(const std::string& path);

/// Instantiates the channel parameter list for a schema from per-kind
/// settings.
KernelParams make_kernel_params(const KernelProfile& profile, const FeatureSchema& schema);

}  // namespace kreg
