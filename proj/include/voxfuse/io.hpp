/*
 * voxfuse : volumetric lesion mask fusion and evaluation
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VOXFUSE_IO_HPP
#define VOXFUSE_IO_HPP

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "voxfuse/preprocess.hpp"
#include "voxfuse/version.hpp"
#include "voxfuse/volume.hpp"

namespace voxfuse {

// Bit-exact readers and writers for two on-disk formats.
//
// NIfTI-1, single-file (.nii) only: magic "n+1\0", dim[0] = 3, datatypes
// uint8 (2), int16 (4) and float32 (16). Byte order is auto-detected from
// sizeof_hdr. Files are always written little-endian with vox_offset 352,
// scl_slope 1 and scl_inter 0. Paired .hdr/.img ("ni1\0"), gzip streams,
// NIfTI-2 and 4D series are rejected. Orientation metadata (qform/sform)
// is carried through verbatim when a caller passes it back to a writer,
// but is never interpreted: every volume in one run is assumed
// co-registered.
//
// VXF1, a minimal raw interchange format used for fixtures and slice
// export. Little-endian layout:
//   magic "VXF1" | u32 nx,ny,nz | f32 sx,sy,sz | u8 dtype | payload
// with dtype 0 = binary (u8), 1 = float32, 2 = atlas (u8).

enum class VolumeKind { Binary, Weighted, Atlas };
enum class FileFormat { Nifti, Vxf1 };

enum class NiftiDatatype : std::int16_t {
    Uint8 = 2,
    Int16 = 4,
    Float32 = 16,
};

struct NiftiOrientation {
    std::int16_t qform_code = 0, sform_code = 0;
    float quatern_b = 0, quatern_c = 0, quatern_d = 0;
    float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
    std::array<float, 4> srow_x{}, srow_y{}, srow_z{};
};

/// Header fields the toolkit validates and preserves, after byte-order
/// resolution.
struct NiftiHeaderView {
    std::int32_t sizeof_hdr = 348;
    std::array<std::int16_t, 8> dim{};
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    std::array<float, 8> pixdim{};
    float vox_offset = 352.0f;
    float scl_slope = 1.0f;
    float scl_inter = 0.0f;
    std::array<char, 4> magic{};
    NiftiOrientation orientation;
    bool byte_swapped = false;
};

/// Side facts gathered while reading a volume; callers that log surface
/// these as warnings.
struct ReadInfo {
    std::size_t negatives_clamped = 0;
    int spacing_axes_defaulted = 0;
    bool byte_swapped = false;
    FileFormat format = FileFormat::Nifti;
    NiftiOrientation orientation{};
};

namespace detail {

inline std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "' for reading");
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    if (size > 0)
        in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in)
        throw IoError("failed reading '" + path.string() + "'");
    return bytes;
}

inline std::uint16_t load_u16(const unsigned char* p, bool big) {
    return big ? static_cast<std::uint16_t>((p[0] << 8) | p[1])
               : static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t load_u32(const unsigned char* p, bool big) {
    if (big)
        return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
               (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

inline std::int16_t load_i16(const unsigned char* p, bool big) {
    return std::bit_cast<std::int16_t>(load_u16(p, big));
}

inline std::int32_t load_i32(const unsigned char* p, bool big) {
    return std::bit_cast<std::int32_t>(load_u32(p, big));
}

inline float load_f32(const unsigned char* p, bool big) {
    return std::bit_cast<float>(load_u32(p, big));
}

inline void store_u16(unsigned char* p, std::uint16_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>(v >> 8);
}

inline void store_u32(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

inline void store_i16(unsigned char* p, std::int16_t v) {
    store_u16(p, std::bit_cast<std::uint16_t>(v));
}

inline void store_i32(unsigned char* p, std::int32_t v) {
    store_u32(p, std::bit_cast<std::uint32_t>(v));
}

inline void store_f32(unsigned char* p, float v) {
    store_u32(p, std::bit_cast<std::uint32_t>(v));
}

inline NiftiHeaderView parse_nifti_header(std::span<const unsigned char> h,
                                          const std::string& name) {
    if (h.size() < 348)
        throw FormatError("'" + name + "': truncated NIfTI-1 header (" +
                          std::to_string(h.size()) + " bytes, need 348)");
    bool big = false;
    if (load_i32(h.data(), false) == 348) {
        big = false;
    } else if (load_i32(h.data(), true) == 348) {
        big = true;
    } else {
        throw FormatError("'" + name +
                          "': malformed header, sizeof_hdr is not 348 in "
                          "either byte order");
    }
    NiftiHeaderView v;
    v.byte_swapped = big;
    v.sizeof_hdr = load_i32(h.data(), big);
    for (int i = 0; i < 8; ++i)
        v.dim[i] = load_i16(h.data() + 40 + 2 * i, big);
    v.datatype = load_i16(h.data() + 70, big);
    v.bitpix = load_i16(h.data() + 72, big);
    for (int i = 0; i < 8; ++i)
        v.pixdim[i] = load_f32(h.data() + 76 + 4 * i, big);
    v.vox_offset = load_f32(h.data() + 108, big);
    v.scl_slope = load_f32(h.data() + 112, big);
    v.scl_inter = load_f32(h.data() + 116, big);
    std::memcpy(v.magic.data(), h.data() + 344, 4);
    v.orientation.qform_code = load_i16(h.data() + 252, big);
    v.orientation.sform_code = load_i16(h.data() + 254, big);
    v.orientation.quatern_b = load_f32(h.data() + 256, big);
    v.orientation.quatern_c = load_f32(h.data() + 260, big);
    v.orientation.quatern_d = load_f32(h.data() + 264, big);
    v.orientation.qoffset_x = load_f32(h.data() + 268, big);
    v.orientation.qoffset_y = load_f32(h.data() + 272, big);
    v.orientation.qoffset_z = load_f32(h.data() + 276, big);
    for (int i = 0; i < 4; ++i) {
        v.orientation.srow_x[i] = load_f32(h.data() + 280 + 4 * i, big);
        v.orientation.srow_y[i] = load_f32(h.data() + 296 + 4 * i, big);
        v.orientation.srow_z[i] = load_f32(h.data() + 312 + 4 * i, big);
    }

    static const std::array<char, 4> magic_single = {'n', '+', '1', '\0'};
    static const std::array<char, 4> magic_paired = {'n', 'i', '1', '\0'};
    if (v.magic == magic_paired)
        throw FormatError("'" + name +
                          "': paired .hdr/.img NIfTI (magic \"ni1\") is not "
                          "supported, use single-file \"n+1\"");
    if (v.magic != magic_single)
        throw FormatError("'" + name + "': malformed header, bad magic");
    if (v.dim[0] != 3)
        throw FormatError("'" + name + "': dim[0] is " +
                          std::to_string(v.dim[0]) +
                          ", only 3D volumes are supported");
    if (v.dim[1] < 1 || v.dim[2] < 1 || v.dim[3] < 1)
        throw FormatError("'" + name + "': malformed header, non-positive dim");
    if (v.datatype != 2 && v.datatype != 4 && v.datatype != 16)
        throw FormatError("'" + name + "': unsupported datatype code " +
                          std::to_string(v.datatype) +
                          " (only uint8=2, int16=4, float32=16)");
    const int expected_bitpix = v.datatype == 2 ? 8 : v.datatype == 4 ? 16 : 32;
    if (v.bitpix != expected_bitpix)
        throw FormatError("'" + name + "': malformed header, bitpix " +
                          std::to_string(v.bitpix) +
                          " does not match datatype");
    if (!(v.vox_offset >= 352.0f))
        throw FormatError("'" + name + "': malformed header, vox_offset " +
                          std::to_string(v.vox_offset) + " < 352");
    return v;
}

/// Scaled scalar values of a volume file, format-agnostic.
struct DecodedVolume {
    GridShape shape;
    std::vector<double> values;
    bool byte_swapped = false;
    FileFormat format = FileFormat::Nifti;
    NiftiOrientation orientation{};
    int spacing_axes_defaulted = 0;
    std::string datatype_name;
};

inline GridShape make_shape_defaulting_spacing(int nx, int ny, int nz,
                                               double sx, double sy, double sz,
                                               int& defaulted) {
    defaulted = 0;
    auto fix = [&defaulted](double s) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            ++defaulted;
            return 1.0;
        }
        return s;
    };
    return GridShape(nx, ny, nz, fix(sx), fix(sy), fix(sz));
}

inline DecodedVolume decode_nifti(const std::vector<unsigned char>& bytes,
                                  const std::string& name) {
    const NiftiHeaderView h = parse_nifti_header(bytes, name);
    const bool big = h.byte_swapped;
    DecodedVolume d;
    d.byte_swapped = big;
    d.format = FileFormat::Nifti;
    d.orientation = h.orientation;
    d.shape = make_shape_defaulting_spacing(
        h.dim[1], h.dim[2], h.dim[3], h.pixdim[1], h.pixdim[2], h.pixdim[3],
        d.spacing_axes_defaulted);
    d.datatype_name =
        h.datatype == 2 ? "uint8" : h.datatype == 4 ? "int16" : "float32";

    const std::size_t count = d.shape.voxel_count();
    const std::size_t elem = static_cast<std::size_t>(h.bitpix) / 8;
    const std::size_t offset =
        static_cast<std::size_t>(std::llround(h.vox_offset));
    if (offset + count * elem > bytes.size())
        throw FormatError("'" + name + "': truncated payload, need " +
                          std::to_string(offset + count * elem) +
                          " bytes but file has " +
                          std::to_string(bytes.size()));
    // slope 0 is the NIfTI convention for "no scaling"
    const double slope = h.scl_slope == 0.0f ? 1.0 : h.scl_slope;
    const double inter = h.scl_inter;
    d.values.resize(count);
    const unsigned char* p = bytes.data() + offset;
    switch (h.datatype) {
    case 2:
        for (std::size_t i = 0; i < count; ++i)
            d.values[i] = static_cast<double>(p[i]) * slope + inter;
        break;
    case 4:
        for (std::size_t i = 0; i < count; ++i)
            d.values[i] =
                static_cast<double>(load_i16(p + 2 * i, big)) * slope + inter;
        break;
    default:
        for (std::size_t i = 0; i < count; ++i)
            d.values[i] =
                static_cast<double>(load_f32(p + 4 * i, big)) * slope + inter;
        break;
    }
    return d;
}

inline DecodedVolume decode_vxf1(const std::vector<unsigned char>& bytes,
                                 const std::string& name) {
    constexpr std::size_t header_size = 4 + 3 * 4 + 3 * 4 + 1;
    if (bytes.size() < header_size)
        throw FormatError("'" + name + "': truncated VXF1 header");
    DecodedVolume d;
    d.format = FileFormat::Vxf1;
    const unsigned char* p = bytes.data();
    const std::uint32_t nx = load_u32(p + 4, false);
    const std::uint32_t ny = load_u32(p + 8, false);
    const std::uint32_t nz = load_u32(p + 12, false);
    const float sx = load_f32(p + 16, false);
    const float sy = load_f32(p + 20, false);
    const float sz = load_f32(p + 24, false);
    const unsigned dtype = p[28];
    if (nx < 1 || ny < 1 || nz < 1)
        throw FormatError("'" + name + "': VXF1 dims must be >= 1");
    if (dtype > 2)
        throw FormatError("'" + name + "': VXF1 dtype byte " +
                          std::to_string(dtype) + " unknown");
    d.shape = make_shape_defaulting_spacing(static_cast<int>(nx),
                                            static_cast<int>(ny),
                                            static_cast<int>(nz), sx, sy, sz,
                                            d.spacing_axes_defaulted);
    d.datatype_name = dtype == 0 ? "binary" : dtype == 1 ? "float32" : "atlas";
    const std::size_t count = d.shape.voxel_count();
    const std::size_t elem = dtype == 1 ? 4 : 1;
    if (header_size + count * elem > bytes.size())
        throw FormatError("'" + name + "': truncated VXF1 payload");
    d.values.resize(count);
    const unsigned char* payload = p + header_size;
    if (dtype == 1) {
        for (std::size_t i = 0; i < count; ++i)
            d.values[i] = load_f32(payload + 4 * i, false);
    } else {
        for (std::size_t i = 0; i < count; ++i)
            d.values[i] = payload[i];
    }
    return d;
}

inline DecodedVolume decode_volume_file(const std::filesystem::path& path) {
    const std::string name = path.string();
    const std::vector<unsigned char> bytes = slurp(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
        throw FormatError("'" + name +
                          "': gzip-compressed volumes are not supported, "
                          "decompress the file first");
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "VXF1", 4) == 0)
        return decode_vxf1(bytes, name);
    return decode_nifti(bytes, name);
}

inline void fill_read_info(const DecodedVolume& d, ReadInfo* info) {
    if (!info)
        return;
    info->byte_swapped = d.byte_swapped;
    info->format = d.format;
    info->orientation = d.orientation;
    info->spacing_axes_defaulted = d.spacing_axes_defaulted;
}

} // namespace detail

inline NiftiHeaderView read_nifti_header(const std::filesystem::path& path) {
    const auto bytes = detail::slurp(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
        throw FormatError("'" + path.string() +
                          "': gzip-compressed volumes are not supported, "
                          "decompress the file first");
    return detail::parse_nifti_header(bytes, path.string());
}

/// Decodes to a mask with the fixed binarization rule: scaled value
/// > 0.5 becomes 1.
inline BinaryVolume read_binary_volume(const std::filesystem::path& path,
                                       ReadInfo* info = nullptr) {
    auto d = detail::decode_volume_file(path);
    detail::fill_read_info(d, info);
    BinaryVolume out(d.shape);
    for (std::size_t i = 0; i < d.values.size(); ++i)
        out.data[i] = d.values[i] > 0.5;
    return out;
}

/// Decodes to scaled float weights; negative values are clamped to zero
/// and counted in ReadInfo::negatives_clamped.
inline WeightedVolume read_weighted_volume(const std::filesystem::path& path,
                                           ReadInfo* info = nullptr) {
    auto d = detail::decode_volume_file(path);
    detail::fill_read_info(d, info);
    WeightedVolume out(d.shape);
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        double v = d.values[i];
        if (v < 0.0) {
            v = 0.0;
            ++clamped;
        }
        out.data[i] = static_cast<float>(v);
    }
    if (info)
        info->negatives_clamped = clamped;
    return out;
}

/// Decodes to region labels, rounding to the nearest integer and
/// rejecting anything outside {0..4}.
inline AtlasVolume read_atlas_volume(const std::filesystem::path& path,
                                     ReadInfo* info = nullptr) {
    auto d = detail::decode_volume_file(path);
    detail::fill_read_info(d, info);
    AtlasVolume out(d.shape);
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        const long long label = std::llround(d.values[i]);
        if (label < 0 || label > AtlasVolume::k_max_label)
            throw FormatError("'" + path.string() + "': atlas label " +
                              std::to_string(label) + " at linear index " +
                              std::to_string(i) + " outside {0..4}");
        out.data[i] = static_cast<std::uint8_t>(label);
    }
    return out;
}

namespace detail {

inline std::array<unsigned char, 352>
build_nifti_header(const GridShape& shape, NiftiDatatype dt,
                   const NiftiOrientation* orientation) {
    std::array<unsigned char, 352> h{};
    store_i32(h.data() + 0, 348);
    store_i16(h.data() + 40, 3); // dim[0]
    store_i16(h.data() + 42, static_cast<std::int16_t>(shape.nx));
    store_i16(h.data() + 44, static_cast<std::int16_t>(shape.ny));
    store_i16(h.data() + 46, static_cast<std::int16_t>(shape.nz));
    for (int i = 4; i < 8; ++i)
        store_i16(h.data() + 40 + 2 * i, 1);
    store_i16(h.data() + 70, static_cast<std::int16_t>(dt));
    store_i16(h.data() + 72, dt == NiftiDatatype::Float32 ? 32
                             : dt == NiftiDatatype::Int16 ? 16
                                                          : 8);
    store_f32(h.data() + 76, 1.0f); // pixdim[0] (qfac)
    store_f32(h.data() + 80, static_cast<float>(shape.sx));
    store_f32(h.data() + 84, static_cast<float>(shape.sy));
    store_f32(h.data() + 88, static_cast<float>(shape.sz));
    store_f32(h.data() + 108, 352.0f); // vox_offset
    store_f32(h.data() + 112, 1.0f);   // scl_slope
    store_f32(h.data() + 116, 0.0f);   // scl_inter
    h[123] = 2;                        // xyzt_units: millimeters
    const std::string descrip = std::string("voxfuse ") + k_version;
    std::memcpy(h.data() + 148, descrip.data(),
                std::min<std::size_t>(descrip.size(), 79));
    if (orientation) {
        store_i16(h.data() + 252, orientation->qform_code);
        store_i16(h.data() + 254, orientation->sform_code);
        store_f32(h.data() + 256, orientation->quatern_b);
        store_f32(h.data() + 260, orientation->quatern_c);
        store_f32(h.data() + 264, orientation->quatern_d);
        store_f32(h.data() + 268, orientation->qoffset_x);
        store_f32(h.data() + 272, orientation->qoffset_y);
        store_f32(h.data() + 276, orientation->qoffset_z);
        for (int i = 0; i < 4; ++i) {
            store_f32(h.data() + 280 + 4 * i, orientation->srow_x[i]);
            store_f32(h.data() + 296 + 4 * i, orientation->srow_y[i]);
            store_f32(h.data() + 312 + 4 * i, orientation->srow_z[i]);
        }
    }
    std::memcpy(h.data() + 344, "n+1\0", 4);
    // bytes 348..351 stay zero: no header extensions
    return h;
}

inline void write_bytes(const std::filesystem::path& path,
                        std::span<const unsigned char> a,
                        std::span<const unsigned char> b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(a.data()),
              static_cast<std::streamsize>(a.size()));
    out.write(reinterpret_cast<const char*>(b.data()),
              static_cast<std::streamsize>(b.size()));
    out.flush();
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

inline std::vector<unsigned char>
encode_f32_payload(const std::vector<float>& values) {
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i)
        store_f32(bytes.data() + 4 * i, values[i]);
    return bytes;
}

} // namespace detail

inline void write_nifti(const BinaryVolume& v, const std::filesystem::path& p,
                        NiftiDatatype dt = NiftiDatatype::Uint8,
                        const NiftiOrientation* orientation = nullptr) {
    if (dt != NiftiDatatype::Uint8)
        throw InvalidArgumentError(
            "write_nifti: binary volumes must be written as uint8");
    const auto header = detail::build_nifti_header(v.shape, dt, orientation);
    detail::write_bytes(p, header, v.data);
}

inline void write_nifti(const AtlasVolume& v, const std::filesystem::path& p,
                        NiftiDatatype dt = NiftiDatatype::Uint8,
                        const NiftiOrientation* orientation = nullptr) {
    if (dt != NiftiDatatype::Uint8)
        throw InvalidArgumentError(
            "write_nifti: atlas volumes must be written as uint8");
    const auto header = detail::build_nifti_header(v.shape, dt, orientation);
    detail::write_bytes(p, header, v.data);
}

inline void write_nifti(const WeightedVolume& v,
                        const std::filesystem::path& p,
                        NiftiDatatype dt = NiftiDatatype::Float32,
                        const NiftiOrientation* orientation = nullptr) {
    if (dt != NiftiDatatype::Float32)
        throw InvalidArgumentError(
            "write_nifti: weighted volumes must be written as float32");
    const auto header = detail::build_nifti_header(v.shape, dt, orientation);
    detail::write_bytes(p, header, detail::encode_f32_payload(v.data));
}

namespace detail {

inline std::array<unsigned char, 29> build_vxf1_header(const GridShape& s,
                                                       unsigned char dtype) {
    std::array<unsigned char, 29> h{};
    std::memcpy(h.data(), "VXF1", 4);
    store_u32(h.data() + 4, static_cast<std::uint32_t>(s.nx));
    store_u32(h.data() + 8, static_cast<std::uint32_t>(s.ny));
    store_u32(h.data() + 12, static_cast<std::uint32_t>(s.nz));
    store_f32(h.data() + 16, static_cast<float>(s.sx));
    store_f32(h.data() + 20, static_cast<float>(s.sy));
    store_f32(h.data() + 24, static_cast<float>(s.sz));
    h[28] = dtype;
    return h;
}

} // namespace detail

inline void write_vxf1(const BinaryVolume& v, const std::filesystem::path& p) {
    detail::write_bytes(p, detail::build_vxf1_header(v.shape, 0), v.data);
}

inline void write_vxf1(const WeightedVolume& v,
                       const std::filesystem::path& p) {
    detail::write_bytes(p, detail::build_vxf1_header(v.shape, 1),
                        detail::encode_f32_payload(v.data));
}

inline void write_vxf1(const AtlasVolume& v, const std::filesystem::path& p) {
    detail::write_bytes(p, detail::build_vxf1_header(v.shape, 2), v.data);
}

namespace detail {

inline bool is_vxf_extension(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".vxf" || ext == ".vxf1";
}

} // namespace detail

/// Writes in the format implied by the extension: .vxf/.vxf1 selects
/// VXF1, everything else NIfTI-1.
template <class Volume>
void write_volume(const Volume& v, const std::filesystem::path& p,
                  const NiftiOrientation* orientation = nullptr) {
    if (detail::is_vxf_extension(p))
        write_vxf1(v, p);
    else if constexpr (std::is_same_v<Volume, WeightedVolume>)
        write_nifti(v, p, NiftiDatatype::Float32, orientation);
    else
        write_nifti(v, p, NiftiDatatype::Uint8, orientation);
}

/// Writes every axial plane of a volume as its own VXF1 file named
/// `<stem>_z<index>.vxf` with the z index zero-padded to width 4.
/// Returns the written paths in z order.
template <class Volume>
std::vector<std::filesystem::path>
export_axial_slices(const Volume& v, const std::filesystem::path& dir,
                    const std::string& stem) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory '" + dir.string() +
                      "': " + ec.message());
    std::vector<std::filesystem::path> written;
    const auto planes = axial_slices(v);
    char suffix[16];
    for (std::size_t z = 0; z < planes.size(); ++z) {
        std::snprintf(suffix, sizeof suffix, "_z%04zu.vxf", z);
        const std::filesystem::path path = dir / (stem + suffix);
        write_vxf1(planes[z], path);
        written.push_back(path);
    }
    return written;
}

/// Quick look at a volume file for the `info` command.
struct VolumeFileSummary {
    FileFormat format = FileFormat::Nifti;
    GridShape shape;
    std::string datatype;
    bool byte_swapped = false;
    double min_value = 0.0;
    double max_value = 0.0;
    std::uint64_t nonzero = 0;
    double nonzero_volume_mm3 = 0.0;
};

inline VolumeFileSummary inspect_volume(const std::filesystem::path& path) {
    const auto d = detail::decode_volume_file(path);
    VolumeFileSummary s;
    s.format = d.format;
    s.shape = d.shape;
    s.datatype = d.datatype_name;
    s.byte_swapped = d.byte_swapped;
    if (!d.values.empty()) {
        s.min_value = s.max_value = d.values.front();
        for (double v : d.values) {
            s.min_value = std::min(s.min_value, v);
            s.max_value = std::max(s.max_value, v);
            if (v != 0.0)
                ++s.nonzero;
        }
    }
    s.nonzero_volume_mm3 =
        static_cast<double>(s.nonzero) * d.shape.voxel_volume_mm3();
    return s;
}

} // namespace voxfuse

#endif
