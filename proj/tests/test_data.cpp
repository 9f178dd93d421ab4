#include <catch2/catch_amalgamated.hpp>
#include "lexkit/lexkit.hpp"
