#include "volalign/mrc.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "volalign/error.hpp"

namespace volalign {

namespace {

constexpr std::size_t kHeaderBytes = 1024;

static_assert(std::endian::native == std::endian::little, "MRC I/O assumes a little-endian host");

template <typename T>
T read_word(const std::array<unsigned char, kHeaderBytes>& header, int word, bool swap) {
    std::array<unsigned char, 4> bytes{};
    std::memcpy(bytes.data(), header.data() + 4 * (word - 1), 4);
    if (swap)
        std::swap(bytes[0], bytes[3]), std::swap(bytes[1], bytes[2]);
    T value;
    std::memcpy(&value, bytes.data(), 4);
    return value;
}

template <typename T>
void write_word(std::array<unsigned char, kHeaderBytes>& header, int word, T value) {
    static_assert(sizeof(T) == 4);
    std::memcpy(header.data() + 4 * (word - 1), &value, 4);
}

} // namespace

Volume load_mrc(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open MRC file " + path.string());

    std::array<unsigned char, kHeaderBytes> header{};
    in.read(reinterpret_cast<char*>(header.data()), kHeaderBytes);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes))
        throw IoError("truncated MRC header in " + path.string());

    // Machine stamp 0x11 0x11 marks big-endian data.
    const bool swap = header[212] == 0x11 && header[213] == 0x11;
    const auto nx = read_word<std::int32_t>(header, 1, swap);
    const auto ny = read_word<std::int32_t>(header, 2, swap);
    const auto nz = read_word<std::int32_t>(header, 3, swap);
    const auto mode = read_word<std::int32_t>(header, 4, swap);
    const auto mx = read_word<std::int32_t>(header, 8, swap);
    const auto cella_x = read_word<float>(header, 11, swap);
    const auto ext_bytes = read_word<std::int32_t>(header, 24, swap);

    if (mode != 2)
        throw FormatError("unsupported MRC mode " + std::to_string(mode) + " (only mode 2 is supported)");
    if (nx <= 0 || ny <= 0 || nz <= 0)
        throw DimensionError("invalid MRC dimensions");
    if (nx != ny || ny != nz)
        throw DimensionError("MRC map is not cubic: " + std::to_string(nx) + "x" + std::to_string(ny) +
                             "x" + std::to_string(nz));
    if (ext_bytes < 0)
        throw FormatError("negative extended header size");
    in.seekg(static_cast<std::streamoff>(kHeaderBytes) + ext_bytes, std::ios::beg);

    const auto count = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    std::vector<float> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
        throw IoError("truncated MRC data section in " + path.string());

    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        float value = raw[i];
        if (swap) {
            auto bits = std::bit_cast<std::uint32_t>(value);
            bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
            value = std::bit_cast<float>(bits);
        }
        if (!std::isfinite(value))
            throw FormatError("MRC data contains non-finite values");
        data[i] = value;
    }

    std::optional<double> voxel;
    if (mx > 0 && cella_x > 0.0f)
        voxel = static_cast<double>(cella_x) / mx;
    return Volume(nx, std::move(data), voxel);
}

void save_mrc(const Volume& v, const std::filesystem::path& path) {
    const int n = v.side();
    std::array<unsigned char, kHeaderBytes> header{};
    const auto values = v.data();

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double x : values) {
        const double f = static_cast<float>(x);
        lo = std::min(lo, f);
        hi = std::max(hi, f);
        sum += f;
        sum_sq += f * f;
    }
    const double count = static_cast<double>(values.size());
    const double mean = count > 0 ? sum / count : 0.0;
    const double rms = count > 0 ? std::sqrt(std::max(sum_sq / count - mean * mean, 0.0)) : 0.0;
    const float cell = v.voxel_size() ? static_cast<float>(*v.voxel_size() * n) : 0.0f;

    for (int w = 1; w <= 3; ++w)
        write_word<std::int32_t>(header, w, n); // NX NY NZ
    write_word<std::int32_t>(header, 4, 2);     // MODE
    for (int w = 8; w <= 10; ++w)
        write_word<std::int32_t>(header, w, n); // MX MY MZ
    for (int w = 11; w <= 13; ++w)
        write_word<float>(header, w, cell);     // CELLA
    for (int w = 14; w <= 16; ++w)
        write_word<float>(header, w, 90.0f);    // CELLB
    write_word<std::int32_t>(header, 17, 1);    // MAPC MAPR MAPS
    write_word<std::int32_t>(header, 18, 2);
    write_word<std::int32_t>(header, 19, 3);
    write_word<float>(header, 20, static_cast<float>(lo));
    write_word<float>(header, 21, static_cast<float>(hi));
    write_word<float>(header, 22, static_cast<float>(mean));
    write_word<std::int32_t>(header, 23, 1);     // ISPG
    write_word<std::int32_t>(header, 28, 20140); // NVERSION
    std::memcpy(header.data() + 208, "MAP ", 4);
    header[212] = 0x44;
    header[213] = 0x44;
    write_word<float>(header, 55, static_cast<float>(rms));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(header.data()), kHeaderBytes);
    std::vector<float> raw(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        raw[i] = static_cast<float>(values[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
    out.flush();
    if (!out)
        throw IoError("failed writing MRC file " + path.string());
}

} // namespace volalign
