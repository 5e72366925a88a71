#pragma once

#include "switchlearn/analysis.hpp"
#include "switchlearn/assumptions.hpp"
#include "switchlearn/config.hpp"
#include "switchlearn/export.hpp"
#include "switchlearn/learning.hpp"
#include "switchlearn/model.hpp"
#include "switchlearn/signals.hpp"
#include "switchlearn/simulator.hpp"
#include "switchlearn/switching.hpp"
#include "switchlearn/trajectory.hpp"
