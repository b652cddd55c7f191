#pragma once

#include "topicdiff/alignment.hpp"
#include "topicdiff/corpus.hpp"
#include "topicdiff/divergence.hpp"
#include "topicdiff/factorization.hpp"
#include "topicdiff/pipeline.hpp"
#include "topicdiff/posterior.hpp"
#include "topicdiff/report.hpp"
#include "topicdiff/version.hpp"
