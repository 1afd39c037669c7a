#pragma once

#include "c4r/augment.hpp"
#include "c4r/config.hpp"
#include "c4r/container.hpp"
#include "c4r/curation.hpp"
#include "c4r/dataset.hpp"
#include "c4r/discriminator.hpp"
#include "c4r/error.hpp"
#include "c4r/export.hpp"
#include "c4r/gradcheck.hpp"
#include "c4r/labeling.hpp"
#include "c4r/losses.hpp"
#include "c4r/nn.hpp"
#include "c4r/projectors.hpp"
#include "c4r/quantize.hpp"
#include "c4r/rng.hpp"
#include "c4r/student.hpp"
#include "c4r/teacher.hpp"
#include "c4r/tensor.hpp"
#include "c4r/training.hpp"
