#include "sz3d/nifti.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "sz3d/errors.hpp"

namespace sz3d {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDataOffset = 352;

template <typename T>
void put(std::vector<std::uint8_t>& buf, std::size_t offset, T value) {
  std::memcpy(buf.data() + offset, &value, sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& buf, std::size_t offset) {
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  return value;
}

std::int16_t bitpix_of(NiftiDatatype dt) {
  switch (dt) {
    case NiftiDatatype::Int16: return 16;
    case NiftiDatatype::Float32: return 32;
    case NiftiDatatype::Float64: return 64;
  }
  return 0;
}

}  // namespace

std::vector<std::uint8_t> encode_nifti(const Volume& volume, const NiftiWriteOptions& opts) {
  const std::size_t n = volume.size();
  if (n == 0 || volume.voxels.size() != n)
    throw ShapeError("volume extents do not match its voxel count");
  const std::size_t width = static_cast<std::size_t>(bitpix_of(opts.datatype)) / 8;
  std::vector<std::uint8_t> buf(kDataOffset + n * width, 0);

  put<std::int32_t>(buf, 0, static_cast<std::int32_t>(kHeaderSize));
  put<std::int16_t>(buf, 40, 3);
  for (std::size_t a = 0; a < 3; ++a)
    put<std::int16_t>(buf, 42 + 2 * a, static_cast<std::int16_t>(volume.dims[a]));
  for (std::size_t a = 3; a < 7; ++a) put<std::int16_t>(buf, 42 + 2 * a, 1);
  put<std::int16_t>(buf, 70, static_cast<std::int16_t>(opts.datatype));
  put<std::int16_t>(buf, 72, bitpix_of(opts.datatype));
  put<float>(buf, 76, 1.0f);
  for (std::size_t a = 0; a < 3; ++a)
    put<float>(buf, 80 + 4 * a, static_cast<float>(opts.pixdim[a]));
  put<float>(buf, 108, static_cast<float>(kDataOffset));
  const bool scaled = opts.datatype == NiftiDatatype::Int16;
  put<float>(buf, 112, scaled ? static_cast<float>(opts.scl_slope) : 0.0f);
  put<float>(buf, 116, scaled ? static_cast<float>(opts.scl_inter) : 0.0f);
  put<std::int16_t>(buf, 254, 1);  // sform_code
  std::memcpy(buf.data() + 344, "n+1\0", 4);

  std::uint8_t* out = buf.data() + kDataOffset;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = volume.voxels[i];
    switch (opts.datatype) {
      case NiftiDatatype::Float32: {
        const float f = static_cast<float>(v);
        std::memcpy(out + 4 * i, &f, 4);
        break;
      }
      case NiftiDatatype::Float64:
        std::memcpy(out + 8 * i, &v, 8);
        break;
      case NiftiDatatype::Int16: {
        // match the float32 slope/intercept a reader will see
        const double slope = static_cast<float>(opts.scl_slope);
        const double inter = static_cast<float>(opts.scl_inter);
        const double q = std::round((v - inter) / slope);
        if (q < -32768.0 || q > 32767.0)
          throw FormatError(FormatError::Code::ValueOutOfRange,
                            "voxel value does not fit int16 with the given scaling");
        const std::int16_t s = static_cast<std::int16_t>(q);
        std::memcpy(out + 2 * i, &s, 2);
        break;
      }
    }
  }
  return buf;
}

Volume decode_nifti(const std::vector<std::uint8_t>& bytes, MapKind kind) {
  using Code = FormatError::Code;
  if (bytes.size() < kHeaderSize)
    throw FormatError(Code::Truncated, "file is shorter than a NIfTI-1 header");
  const char* magic = reinterpret_cast<const char*>(bytes.data() + 344);
  if (std::memcmp(magic, "n+1\0", 4) != 0 && std::memcmp(magic, "ni1\0", 4) != 0)
    throw FormatError(Code::BadMagic, "bad NIfTI-1 magic");
  if (get<std::int32_t>(bytes, 0) != static_cast<std::int32_t>(kHeaderSize))
    throw FormatError(Code::Malformed, "sizeof_hdr is not 348 (byte-swapped files are not supported)");

  const std::int16_t ndim = get<std::int16_t>(bytes, 40);
  if (ndim != 3)
    throw FormatError(Code::BadDimensions, "dim[0] is " + std::to_string(ndim) + ", expected 3");
  Volume vol;
  vol.kind = kind;
  for (std::size_t a = 0; a < 3; ++a) {
    const std::int16_t d = get<std::int16_t>(bytes, 42 + 2 * a);
    if (d <= 0)
      throw FormatError(Code::BadDimensions, "dim[" + std::to_string(a + 1) + "] is not positive");
    vol.dims[a] = static_cast<std::size_t>(d);
  }

  const std::int16_t dt = get<std::int16_t>(bytes, 70);
  std::size_t width = 0;
  switch (dt) {
    case 4: width = 2; break;
    case 16: width = 4; break;
    case 64: width = 8; break;
    default:
      throw FormatError(Code::UnsupportedDatatype,
                        "unsupported NIfTI datatype " + std::to_string(dt));
  }
  const float vox_offset = get<float>(bytes, 108);
  const std::size_t offset = vox_offset < static_cast<float>(kDataOffset)
                                 ? kDataOffset
                                 : static_cast<std::size_t>(vox_offset);
  const std::size_t n = vol.size();
  if (bytes.size() < offset + n * width)
    throw FormatError(Code::Truncated, "voxel data truncated: need " + std::to_string(n * width) +
                                           " bytes after offset " + std::to_string(offset));

  double slope = get<float>(bytes, 112);
  double inter = get<float>(bytes, 116);
  if (slope == 0.0 || !std::isfinite(slope)) {
    slope = 1.0;
    inter = 0.0;
  }

  vol.voxels.resize(n);
  const std::uint8_t* src = bytes.data() + offset;
  for (std::size_t i = 0; i < n; ++i) {
    double raw = 0.0;
    if (dt == 4) {
      std::int16_t s;
      std::memcpy(&s, src + 2 * i, 2);
      raw = s;
    } else if (dt == 16) {
      float f;
      std::memcpy(&f, src + 4 * i, 4);
      raw = f;
    } else {
      std::memcpy(&raw, src + 8 * i, 8);
    }
    double v = raw * slope + inter;
    if (!std::isfinite(v))
      throw FormatError(Code::ValueOutOfRange, "non-finite voxel at index " + std::to_string(i));
    if (v < 0.0 || v > 1.0) {
      if (v < -kClampTolerance || v > 1.0 + kClampTolerance)
        throw FormatError(Code::ValueOutOfRange, "voxel " + std::to_string(i) + " has value " +
                                                     std::to_string(v) + " outside [0,1]");
      v = v < 0.0 ? 0.0 : 1.0;
      ++vol.clamped;
    }
    vol.voxels[i] = v;
  }
  return vol;
}

void write_nifti(const std::filesystem::path& path, const Volume& volume,
                 const NiftiWriteOptions& opts) {
  const auto bytes = encode_nifti(volume, opts);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Volume read_nifti(const std::filesystem::path& path, MapKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_nifti(bytes, kind);
  } catch (const FormatError& e) {
    throw FormatError(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace sz3d
