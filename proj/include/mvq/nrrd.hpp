#pragma once

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mvq/volume.hpp"

namespace mvq {

enum class NrrdEncoding { raw, gzip };

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::uint8_t> gzip_compress(const std::uint8_t* data, std::size_t size) {
    z_stream zs{};
    if (deflateInit2(&zs, 6, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw std::runtime_error("gzip: deflateInit2 failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(size)));
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw std::runtime_error("gzip: deflate failed");
    out.resize(out.size() - zs.avail_out);
    return out;
}

inline std::vector<std::uint8_t> gzip_decompress(const std::uint8_t* data, std::size_t size,
                                                 std::size_t expected_size) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw std::runtime_error("gzip: inflateInit2 failed");
    std::vector<std::uint8_t> out(expected_size);
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.avail_out != 0)
        throw std::runtime_error("NRRD: gzip data does not decompress to the declared size");
    return out;
}

/// Parses "(a,b,c)" into three doubles.
inline std::array<double, 3> parse_triple(const std::string& token, const std::string& field) {
    std::array<double, 3> v{};
    std::string t = token;
    for (char& c : t)
        if (c == '(' || c == ')' || c == ',') c = ' ';
    std::istringstream ss(t);
    if (!(ss >> v[0] >> v[1] >> v[2]))
        throw std::runtime_error("NRRD: malformed value in \"" + field + "\": " + token);
    std::string rest;
    if (ss >> rest) throw std::runtime_error("NRRD: malformed value in \"" + field + "\": " + token);
    return v;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Reads a labeled mask from the supported NRRD subset: 3D uint8, diagonal
/// "space directions", raw or gzip encoding, attached or detached data.
/// Any field outside the subset is an error naming the field.
inline LabeledVolume load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("NRRD: cannot open file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    std::size_t pos = content.find('\n');
    if (pos == std::string::npos) throw std::runtime_error("NRRD: missing header: " + path);
    const std::string magic = detail::trim(content.substr(0, pos));
    if (magic.size() != 8 || magic.rfind("NRRD000", 0) != 0 || magic[7] < '1' || magic[7] > '5')
        throw std::runtime_error("NRRD: bad magic line: " + magic);

    std::string type, encoding, data_file;
    int dimension = -1;
    std::array<int, 3> sizes{0, 0, 0};
    std::array<double, 3> spacing{0, 0, 0};
    std::array<double, 3> origin{0, 0, 0};
    bool have_sizes = false, have_directions = false;

    std::size_t line_start = pos + 1;
    std::size_t data_start = std::string::npos;
    while (line_start < content.size()) {
        std::size_t line_end = content.find('\n', line_start);
        if (line_end == std::string::npos) line_end = content.size();
        const std::string line = detail::trim(content.substr(line_start, line_end - line_start));
        line_start = line_end + 1;
        if (line.empty()) {
            data_start = line_start;
            break;
        }
        if (line[0] == '#') continue;
        const std::size_t colon = line.find(": ");
        if (colon == std::string::npos)
            throw std::runtime_error("NRRD: malformed header line: " + line);
        const std::string key = detail::trim(line.substr(0, colon));
        const std::string value = detail::trim(line.substr(colon + 2));

        if (key == "type") {
            type = value;
        } else if (key == "dimension") {
            dimension = std::stoi(value);
        } else if (key == "sizes") {
            std::istringstream ss(value);
            if (!(ss >> sizes[0] >> sizes[1] >> sizes[2]))
                throw std::runtime_error("NRRD: malformed value in \"sizes\": " + value);
            int extra;
            if (ss >> extra) throw std::runtime_error("NRRD: \"sizes\" has more than 3 entries");
            have_sizes = true;
        } else if (key == "space directions") {
            std::istringstream ss(value);
            std::string tok;
            for (int a = 0; a < 3; ++a) {
                if (!(ss >> tok))
                    throw std::runtime_error("NRRD: \"space directions\" needs 3 vectors");
                const auto dir = detail::parse_triple(tok, "space directions");
                for (int b = 0; b < 3; ++b) {
                    if (b == a) continue;
                    if (std::fabs(dir[b]) > 1e-12 * std::max(1.0, std::fabs(dir[a])))
                        throw std::runtime_error("NRRD: \"space directions\" is not diagonal");
                }
                if (!(dir[a] > 0.0))
                    throw std::runtime_error("NRRD: \"space directions\" diagonal must be positive");
                spacing[a] = dir[a];
            }
            have_directions = true;
        } else if (key == "space origin") {
            origin = detail::parse_triple(value, "space origin");
        } else if (key == "encoding") {
            encoding = value;
        } else if (key == "data file") {
            data_file = value;
        } else {
            throw std::runtime_error("NRRD: unsupported field \"" + key + "\"");
        }
        if (line_end == content.size()) break;
    }

    if (type.empty()) throw std::runtime_error("NRRD: missing field \"type\"");
    if (type != "uint8" && type != "uint8_t" && type != "uchar" && type != "unsigned char")
        throw std::runtime_error("NRRD: unsupported type \"" + type + "\" (uint8 required)");
    if (dimension != 3)
        throw std::runtime_error("NRRD: dimension != 3 (got " + std::to_string(dimension) + ")");
    if (!have_sizes) throw std::runtime_error("NRRD: missing field \"sizes\"");
    if (!have_directions) throw std::runtime_error("NRRD: missing field \"space directions\"");
    if (encoding.empty()) throw std::runtime_error("NRRD: missing field \"encoding\"");
    if (encoding != "raw" && encoding != "gzip")
        throw std::runtime_error("NRRD: unsupported encoding \"" + encoding + "\"");
    for (int a = 0; a < 3; ++a)
        if (sizes[a] < 2)
            throw std::runtime_error("NRRD: sizes[" + std::to_string(a) + "] < 2");

    LabeledVolume volume;
    volume.dims = sizes;
    volume.spacing = spacing;
    volume.origin = origin;
    const std::size_t n = volume.voxel_count();

    const std::uint8_t* raw = nullptr;
    std::size_t raw_size = 0;
    std::vector<std::uint8_t> detached;
    if (!data_file.empty()) {
        const auto data_path = std::filesystem::path(path).parent_path() / data_file;
        std::ifstream din(data_path, std::ios::binary);
        if (!din) throw std::runtime_error("NRRD: cannot open data file: " + data_path.string());
        detached.assign(std::istreambuf_iterator<char>(din), std::istreambuf_iterator<char>());
        raw = detached.data();
        raw_size = detached.size();
    } else {
        if (data_start == std::string::npos)
            throw std::runtime_error("NRRD: attached data missing (no blank line after header)");
        raw = reinterpret_cast<const std::uint8_t*>(content.data()) + data_start;
        raw_size = content.size() - data_start;
    }

    if (encoding == "raw") {
        if (raw_size != n)
            throw std::runtime_error("NRRD: raw data size " + std::to_string(raw_size) +
                                     " does not match voxel count " + std::to_string(n));
        volume.labels.assign(raw, raw + n);
    } else {
        volume.labels = detail::gzip_decompress(raw, raw_size, n);
    }

    volume.validate();
    return volume;
}

/// Writes a labeled mask in the attached NRRD-subset form readable by load_mask.
inline void save_mask(const LabeledVolume& volume, const std::string& path,
                      NrrdEncoding encoding = NrrdEncoding::gzip) {
    volume.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("NRRD: cannot open file for writing: " + path);

    out << "NRRD0004\n";
    out << "type: uint8\n";
    out << "dimension: 3\n";
    out << "sizes: " << volume.dims[0] << " " << volume.dims[1] << " " << volume.dims[2] << "\n";
    out << "space directions: (" << detail::format_double(volume.spacing[0]) << ",0,0) (0,"
        << detail::format_double(volume.spacing[1]) << ",0) (0,0,"
        << detail::format_double(volume.spacing[2]) << ")\n";
    out << "space origin: (" << detail::format_double(volume.origin[0]) << ","
        << detail::format_double(volume.origin[1]) << ","
        << detail::format_double(volume.origin[2]) << ")\n";
    out << "encoding: " << (encoding == NrrdEncoding::raw ? "raw" : "gzip") << "\n";
    out << "\n";

    if (encoding == NrrdEncoding::raw) {
        out.write(reinterpret_cast<const char*>(volume.labels.data()),
                  static_cast<std::streamsize>(volume.labels.size()));
    } else {
        const auto compressed = detail::gzip_compress(volume.labels.data(), volume.labels.size());
        out.write(reinterpret_cast<const char*>(compressed.data()),
                  static_cast<std::streamsize>(compressed.size()));
    }
    if (!out) throw std::runtime_error("NRRD: write failed: " + path);
}

}  // namespace mvq
