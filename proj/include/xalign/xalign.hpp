#pragma once

#include "xalign/dictionary.hpp"
#include "xalign/embedding_io.hpp"
#include "xalign/error.hpp"
#include "xalign/evaluation.hpp"
#include "xalign/matrix.hpp"
#include "xalign/preprocess.hpp"
#include "xalign/procrustes.hpp"
#include "xalign/projection.hpp"
#include "xalign/retrieval.hpp"
#include "xalign/svd.hpp"
