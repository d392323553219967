#pragma once

#include <artjudge/agent.hpp>
#include <artjudge/benchmark.hpp>
#include <artjudge/config.hpp>
#include <artjudge/core.hpp>
#include <artjudge/embedding_store.hpp>
#include <artjudge/errors.hpp>
#include <artjudge/fixture.hpp>
#include <artjudge/graph_export.hpp>
#include <artjudge/iconclass.hpp>
#include <artjudge/metrics.hpp>
#include <artjudge/retrieval.hpp>
#include <artjudge/scripted_backend.hpp>
#include <artjudge/text.hpp>
#include <artjudge/tools.hpp>
#include <artjudge/wolfflin.hpp>
#include <artjudge/workspace.hpp>
