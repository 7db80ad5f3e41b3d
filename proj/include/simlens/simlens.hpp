#pragma once

#include "simlens/error.hpp"
#include "simlens/matrix.hpp"
#include "simlens/rng.hpp"
#include "simlens/linalg.hpp"
#include "simlens/embedder/types.hpp"
#include "simlens/embedder/stub.hpp"
#include "simlens/embedder/subword_tokenizer.hpp"
#include "simlens/embedder/safetensors.hpp"
#include "simlens/embedder/encoder.hpp"
#include "simlens/embedder/backend.hpp"
#include "simlens/simcore.hpp"
#include "simlens/dimred/projection.hpp"
#include "simlens/dimred/pca.hpp"
#include "simlens/dimred/tsne.hpp"
#include "simlens/dimred/umap.hpp"
#include "simlens/saliency.hpp"
#include "simlens/report/fixtures.hpp"
#include "simlens/report/svg.hpp"
#include "simlens/report/report.hpp"
#include "simlens/report/pipeline.hpp"
