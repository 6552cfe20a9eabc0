#include "biouncert/volume_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "biouncert/error.hpp"

namespace biouncert {

namespace detail {

namespace {

constexpr std::size_t kMaxHeaderBytes = 4096;

} // namespace

VolumeHeader read_header(std::istream& in, const char* expected_magic)
{
    std::string line;
    char c = 0;
    while (in.get(c)) {
        if (c == '\n')
            break;
        line.push_back(c);
        if (line.size() > kMaxHeaderBytes)
            throw Error(Errc::MalformedHeader, "header line exceeds " + std::to_string(kMaxHeaderBytes) + " bytes");
    }
    if (c != '\n')
        throw Error(Errc::MalformedHeader, "header is not newline-terminated");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::MalformedHeader, std::string("header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || !header.contains("magic") || !header["magic"].is_string())
        throw Error(Errc::MalformedHeader, "header lacks a string 'magic' field");

    const std::string magic = header["magic"].get<std::string>();
    const std::string expected(expected_magic);
    if (magic != expected) {
        // Same family, different revision.
        if (magic.size() > 3 && magic.compare(0, 3, expected, 0, 3) == 0)
            throw Error(Errc::UnsupportedVersion, "'" + magic + "' (expected '" + expected + "')");
        throw Error(Errc::MalformedHeader, "unexpected magic '" + magic + "'");
    }

    const auto& dims = header.value("dims", nlohmann::json());
    const auto& spacing = header.value("spacing_mm", nlohmann::json());
    if (!dims.is_array() || dims.size() != 3 || !spacing.is_array() || spacing.size() != 3)
        throw Error(Errc::MalformedHeader, "'dims' and 'spacing_mm' must be 3-element arrays");

    VolumeHeader h;
    int d[3];
    double s[3];
    for (int i = 0; i < 3; ++i) {
        if (!dims[i].is_number_integer() || dims[i].get<long long>() <= 0 || dims[i].get<long long>() > (1 << 20))
            throw Error(Errc::MalformedHeader, "dims must be positive integers");
        if (!spacing[i].is_number() || !(spacing[i].get<double>() > 0.0))
            throw Error(Errc::MalformedHeader, "spacing_mm must be positive numbers");
        d[i] = static_cast<int>(dims[i].get<long long>());
        s[i] = spacing[i].get<double>();
    }
    h.dims = Dims{d[0], d[1], d[2]};
    h.spacing = Spacing{s[0], s[1], s[2]};
    return h;
}

void write_header(std::ostream& out, const char* magic, const Dims& dims, const Spacing& spacing)
{
    nlohmann::ordered_json header;
    header["magic"] = magic;
    header["dims"] = {dims.nz, dims.ny, dims.nx};
    header["spacing_mm"] = {spacing.sz, spacing.sy, spacing.sx};
    out << header.dump() << '\n';
}

} // namespace detail

LabelVolume read_label_volume(std::istream& in)
{
    const auto header = detail::read_header(in, "blv1");
    const std::size_t n = header.dims.voxel_count();
    std::vector<Label> labels(n);
    in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got != n)
        throw Error(Errc::PayloadLength, "expected " + std::to_string(n) + " label bytes, got " + std::to_string(got));
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(Errc::PayloadLength, "trailing bytes after " + std::to_string(n) + " label bytes");
    return LabelVolume(header.dims, header.spacing, std::move(labels));
}

LabelVolume read_label_volume(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::Io, "cannot open '" + path.string() + "'");
    return read_label_volume(in);
}

void write_label_volume(const LabelVolume& vol, std::ostream& out)
{
    detail::write_header(out, "blv1", vol.dims(), vol.spacing());
    const auto labels = vol.labels();
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
    if (!out)
        throw Error(Errc::Io, "write failed");
}

void write_label_volume(const LabelVolume& vol, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
    write_label_volume(vol, out);
    out.close();
    if (!out)
        throw Error(Errc::Io, "failed writing '" + path.string() + "'");
}

} // namespace biouncert
