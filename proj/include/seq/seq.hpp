#pragma once
// Umbrella header: supervised encoder, k-means quantizer with labeled
// codebook, mirrored decoder, and convex-combination image generation.

#include "seq/bundle.hpp"
#include "seq/codebook.hpp"
#include "seq/config.hpp"
#include "seq/csv.hpp"
#include "seq/dataset.hpp"
#include "seq/decoder.hpp"
#include "seq/encoder.hpp"
#include "seq/errors.hpp"
#include "seq/feature_set.hpp"
#include "seq/generate.hpp"
#include "seq/idx.hpp"
#include "seq/image_io.hpp"
#include "seq/kmeans.hpp"
#include "seq/layers.hpp"
#include "seq/loss.hpp"
#include "seq/matmul.hpp"
#include "seq/network.hpp"
#include "seq/parallel.hpp"
#include "seq/rng.hpp"
#include "seq/tensor.hpp"
