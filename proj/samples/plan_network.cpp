// Resolve a compression plan for a descriptor file and report cycles and
// energy against the uncompressed im2col mapping.
#include <cstdio>

#include "imclr/imclr.hpp"

int main(int argc, char** argv) {
  using namespace imclr;
  try {
    const NetworkDescriptor net =
        argc > 1 ? load_descriptor(argv[1]) : preset("resnet20").without_downsample();
    const ArrayConfig array{128, 128};
    const CompressionPlan plan{{true, RankSpec::over_m(8), 4, {PwMode::automatic, {}}}, {}};
    const ResolvedPlan resolved = resolve_plan(net, plan, array);

    const NetworkCycles cyc = network_cycles(net, resolved, array);
    for (const auto& l : cyc.layers) std::printf("%-20s %8zu\n", l.name.c_str(), l.report.total);
    const std::size_t base = network_cycles(net, im2col_baseline_plan(net), array).total;
    std::printf("%s: %zu cycles vs %zu (%.2fx), normalized energy %.3f\n", net.name.c_str(), cyc.total,
                base, speedup(base, cyc.total), network_energy(net, resolved, array, {}).normalized);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
