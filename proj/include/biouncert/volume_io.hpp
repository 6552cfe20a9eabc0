#pragma once

#include <filesystem>
#include <iosfwd>

#include "biouncert/label_volume.hpp"

namespace biouncert {

// "blv1": one line of JSON {"magic","dims","spacing_mm"} terminated by '\n',
// then nz*ny*nx label bytes in z, y, x order.
LabelVolume read_label_volume(const std::filesystem::path& path);
LabelVolume read_label_volume(std::istream& in);

void write_label_volume(const LabelVolume& vol, const std::filesystem::path& path);
void write_label_volume(const LabelVolume& vol, std::ostream& out);

namespace detail {

struct VolumeHeader {
    Dims dims;
    Spacing spacing;
};

/// Reads and validates the header line of a blv1/bfv1 file.
VolumeHeader read_header(std::istream& in, const char* expected_magic);
void write_header(std::ostream& out, const char* magic, const Dims& dims, const Spacing& spacing);

} // namespace detail

} // namespace biouncert
