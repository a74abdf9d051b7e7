#pragma once

#include "rgi/random.hpp"
#include "rgi/grammar.hpp"
#include "rgi/automata.hpp"
#include "rgi/dataset.hpp"
#include "rgi/model.hpp"
#include "rgi/extraction.hpp"
#include "rgi/eval.hpp"
#include "rgi/io.hpp"
