#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "biouncert/confidence.hpp"
#include "biouncert/error.hpp"
#include "biouncert/volume_io.hpp"

namespace biouncert::metrics {

namespace {

static_assert(sizeof(float) == 4);

std::uint32_t to_little_endian(std::uint32_t v)
{
    if constexpr (std::endian::native == std::endian::big)
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    return v;
}

} // namespace

void write_uncertainty_map(const UncertaintyMap& map, std::ostream& out)
{
    if (map.values.size() != map.dims.voxel_count())
        throw Error(Errc::PayloadLength, "uncertainty map size does not match dims");
    biouncert::detail::write_header(out, "bfv1", map.dims, map.spacing);
    std::vector<char> bytes(map.values.size() * 4);
    for (std::size_t i = 0; i < map.values.size(); ++i) {
        const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(map.values[i])));
        std::memcpy(bytes.data() + 4 * i, &bits, 4);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(Errc::Io, "write failed");
}

void write_uncertainty_map(const UncertaintyMap& map, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
    write_uncertainty_map(map, out);
}

UncertaintyMap read_uncertainty_map(std::istream& in)
{
    const auto h = biouncert::detail::read_header(in, "bfv1");
    const std::size_t n = h.dims.voxel_count();
    std::vector<char> bytes(n * 4);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size() || in.peek() != std::char_traits<char>::eof())
        throw Error(Errc::PayloadLength, "expected " + std::to_string(bytes.size()) + " float32 payload bytes");
    UncertaintyMap map{h.dims, h.spacing, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes.data() + 4 * i, 4);
        map.values[i] = std::bit_cast<float>(to_little_endian(bits));
    }
    return map;
}

UncertaintyMap read_uncertainty_map(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    return read_uncertainty_map(in);
}

} // namespace biouncert::metrics
