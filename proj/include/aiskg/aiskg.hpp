#pragma once

#include "aiskg/accumulator.hpp"
#include "aiskg/ais.hpp"
#include "aiskg/config.hpp"
#include "aiskg/error.hpp"
#include "aiskg/estimator.hpp"
#include "aiskg/evaluation.hpp"
#include "aiskg/geo.hpp"
#include "aiskg/gmm.hpp"
#include "aiskg/graph_io.hpp"
#include "aiskg/ingest.hpp"
#include "aiskg/knowledge_graph.hpp"
#include "aiskg/parallel.hpp"
#include "aiskg/pipeline.hpp"
#include "aiskg/route.hpp"
#include "aiskg/segmentation.hpp"
#include "aiskg/synth.hpp"
#include "aiskg/time.hpp"
#include "aiskg/trajectory_io.hpp"
#include "aiskg/transmitter.hpp"
