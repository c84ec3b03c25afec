// Builds a small four-vertex network, evaluates the relocation-center
// objective for every pair of candidate centers under two activations, and
// prints the winning pair for each.
#include <cstdio>
#include <sstream>
#include <string>

#include "fleetsim/relocation.hpp"

using namespace fleetsim;

int main() {
    std::istringstream nodes(
        "node_id,x_m,y_m\n"
        "0,0,0\n1,400,0\n2,0,400\n3,400,400\n");
    // directed minutes between the four points, expressed in seconds
    std::istringstream edges(
        "from,to,slot_0\n"
        "0,1,300\n0,2,780\n0,3,480\n"
        "1,0,240\n1,2,480\n1,3,180\n"
        "2,0,300\n2,1,360\n2,3,540\n"
        "3,0,600\n3,1,660\n3,2,300\n");
    RoadGraph g = load_graph(nodes, edges, 3600);

    std::vector<double> gaps = {1.0, -1.0, 0.0, 1.0};
    DistanceMatrix dm = full_distance_matrix(g, 0);
    const char* names = "ABCD";

    for (ActivationKind kind : {ActivationKind::Ignore, ActivationKind::Identity}) {
        std::printf("activation=%s\n", to_string(kind).c_str());
        for (VertexId a = 0; a < 4; ++a) {
            for (VertexId b = a + 1; b < 4; ++b) {
                std::vector<VertexId> centers = {a, b};
                double obj = objective(dm, centers, gaps, kind) / 60.0;  // minutes
                std::printf("  centers {%c,%c}: objective %.0f\n", names[a], names[b], obj);
            }
        }
        Partition best = brute_force_centers(dm, 2, gaps, kind);
        std::printf("  best: {%c,%c} with objective %.0f\n", names[best.centers[0]],
                    names[best.centers[1]], best.objective / 60.0);
    }
    return 0;
}
