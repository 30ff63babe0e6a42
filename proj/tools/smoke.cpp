#include "srsanon/attacks.hpp"
#include "srsanon/core.hpp"
#include "srsanon/errors.hpp"
#include "srsanon/grouping.hpp"
#include "srsanon/io.hpp"
#include "srsanon/mechanisms.hpp"
#include "srsanon/metrics.hpp"
#include "srsanon/pipeline.hpp"
#include "srsanon/rng.hpp"
#include "srsanon/synth.hpp"
#include "srsanon/taxonomy.hpp"

int main() { return 0; }
