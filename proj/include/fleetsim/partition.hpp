#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fleetsim/activation.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

// k relocation centers plus the induced subareas: a disjoint cover of the
// vertex set with each center inside its own subarea.
struct Partition {
    std::vector<VertexId> centers;                 // ordered, size k
    std::vector<std::vector<VertexId>> subareas;   // aligned with centers, each sorted
    std::vector<std::int32_t> subarea_of;          // vertex -> subarea index
    double objective = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
    ActivationKind activation = ActivationKind::Ignore;

    int k() const { return int(centers.size()); }
};

inline void validate_partition(const Partition& p, std::size_t n) {
    if (p.centers.empty()) throw ValidationError("partition has no centers");
    if (p.subareas.size() != p.centers.size())
        throw ValidationError("partition: subarea/center count mismatch");
    std::vector<int> cover(n, 0);
    for (std::size_t j = 0; j < p.subareas.size(); ++j) {
        bool center_inside = false;
        for (VertexId v : p.subareas[j]) {
            if (v < 0 || std::size_t(v) >= n) throw ValidationError("partition: vertex out of range");
            ++cover[std::size_t(v)];
            if (v == p.centers[j]) center_inside = true;
        }
        if (!center_inside)
            throw ValidationError("partition: center " + std::to_string(p.centers[j]) +
                                  " not inside its own subarea");
    }
    for (std::size_t v = 0; v < n; ++v)
        if (cover[v] != 1)
            throw ValidationError("partition: vertex " + std::to_string(v) +
                                  " covered " + std::to_string(cover[v]) + " times");
    for (std::size_t i = 0; i < p.centers.size(); ++i)
        for (std::size_t j = i + 1; j < p.centers.size(); ++j)
            if (p.centers[i] == p.centers[j])
                throw ValidationError("partition: duplicate center " + std::to_string(p.centers[i]));
}

inline void write_partition_csv(const Partition& p, std::ostream& out) {
    out << "vertex_id,subarea_index,center_id\n";
    for (std::size_t v = 0; v < p.subarea_of.size(); ++v) {
        std::int32_t j = p.subarea_of[v];
        out << v << ',' << j << ',' << p.centers[std::size_t(j)] << '\n';
    }
}

inline std::string partition_summary_json(const Partition& p) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "{\"objective\":%.9g,\"iterations\":%d,\"seed\":%llu,\"activation\":\"%s\"}",
                  p.objective, p.iterations, static_cast<unsigned long long>(p.seed),
                  to_string(p.activation).c_str());
    return buf;
}

}  // namespace fleetsim
