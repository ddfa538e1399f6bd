#include "snapshot.hpp"

#include "mixkin/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mixkin::cli {

namespace {

std::uint64_t to_little(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(x);
    return x;
}

FrameTag frame_from(const std::string& s) {
    if (s == "raw") return FrameTag::Raw;
    if (s == "fluctuation") return FrameTag::Fluctuation;
    if (s == "weighted") return FrameTag::Weighted;
    throw ShapeError("snapshot: unknown frame tag '" + s + "'");
}

} // namespace

void write_snapshot(const std::string& stem, const DistributionField& f, const VelocityGrid& g,
                    const nlohmann::json& meta) {
    if (f.A.size() != g.size() || f.B.size() != g.size())
        throw ShapeError("snapshot: field size does not match the velocity grid");
    const auto flat = f.flat();
    std::ofstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw ConfigError("snapshot: cannot write " + stem + ".bin");
    for (double v : flat) {
        std::uint64_t u = to_little(std::bit_cast<std::uint64_t>(v));
        bin.write(reinterpret_cast<const char*>(&u), sizeof u);
    }
    nlohmann::json side = {{"dtype", "float64"},
                           {"endianness", "little"},
                           {"layout", "species-major, A then B, node index (i*N + j)*N + l"},
                           {"frame", frame_name(f.frame)},
                           {"velocity_grid", {{"R", g.R()}, {"N", g.N()}}},
                           {"count", flat.size()},
                           {"meta", meta}};
    std::ofstream js(stem + ".json");
    if (!js) throw ConfigError("snapshot: cannot write " + stem + ".json");
    js << side.dump(2) << '\n';
}

Snapshot read_snapshot(const std::string& stem) {
    std::ifstream js(stem + ".json");
    if (!js) throw ConfigError("snapshot: cannot open " + stem + ".json");
    nlohmann::json side;
    try {
        side = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("snapshot: bad sidecar: ") + e.what());
    }
    if (side.value("dtype", "") != "float64" || side.value("endianness", "") != "little")
        throw ShapeError("snapshot: only little-endian float64 is supported");
    Snapshot s;
    s.R = side["velocity_grid"]["R"].get<double>();
    s.N = side["velocity_grid"]["N"].get<int>();
    s.meta = side.value("meta", nlohmann::json::object());
    const std::size_t count = side["count"].get<std::size_t>();
    const VelocityGrid g(s.R, s.N);
    if (count != 2 * g.size()) throw ShapeError("snapshot: count does not match the velocity grid");

    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw ConfigError("snapshot: cannot open " + stem + ".bin");
    std::vector<double> flat(count);
    for (auto& v : flat) {
        std::uint64_t u = 0;
        if (!bin.read(reinterpret_cast<char*>(&u), sizeof u)) throw ShapeError("snapshot: truncated binary");
        v = std::bit_cast<double>(to_little(u));
    }
    if (bin.peek() != std::char_traits<char>::eof()) throw ShapeError("snapshot: trailing bytes in binary");
    s.field = DistributionField::from_flat(frame_from(side["frame"].get<std::string>()), flat);
    return s;
}

} // namespace mixkin::cli
