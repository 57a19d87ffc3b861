// SPDX-License-Identifier: Apache-2.0
#include "exhibit/images.hpp"

#include "exhibit/checksum.hpp"
#include "exhibit/error.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>

namespace exhibit {

bool is_supported_media_type(std::string_view media_type)
{
    return media_type == media_png || media_type == media_jpeg;
}

std::string media_type_for_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        return std::string(media_png);
    if (ext == ".jpg" || ext == ".jpeg")
        return std::string(media_jpeg);
    return {};
}

ImageData::ImageData(std::string bytes, std::string media_type)
    : bytes_(std::make_shared<const std::string>(std::move(bytes))),
      media_type_(std::move(media_type))
{
    content_id_ = "img-" + sha256_hex(*bytes_).substr(0, 24);
}

namespace {

std::uint32_t be32(std::string_view b, std::size_t at)
{
    return (std::uint32_t(std::uint8_t(b[at])) << 24) | (std::uint32_t(std::uint8_t(b[at + 1])) << 16) |
           (std::uint32_t(std::uint8_t(b[at + 2])) << 8) | std::uint32_t(std::uint8_t(b[at + 3]));
}

std::uint16_t be16(std::string_view b, std::size_t at)
{
    return static_cast<std::uint16_t>((std::uint8_t(b[at]) << 8) | std::uint8_t(b[at + 1]));
}

void put_be32(std::string& out, std::uint32_t v)
{
    for (int s = 24; s >= 0; s -= 8)
        out.push_back(static_cast<char>((v >> s) & 0xff));
}

void put_chunk(std::string& out, std::string_view type, std::string_view data)
{
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    std::string body(type);
    body.append(data);
    out.append(body);
    auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

} // namespace

std::optional<ImageSize> image_dimensions(std::string_view b)
{
    static constexpr std::string_view png_sig{"\x89PNG\r\n\x1a\n", 8};
    if (b.size() >= 24 && b.substr(0, 8) == png_sig && b.substr(12, 4) == "IHDR")
        return ImageSize{be32(b, 16), be32(b, 20)};

    if (b.size() >= 4 && std::uint8_t(b[0]) == 0xFF && std::uint8_t(b[1]) == 0xD8) {
        std::size_t i = 2;
        while (i + 4 <= b.size()) {
            if (std::uint8_t(b[i]) != 0xFF)
                return std::nullopt;
            const std::uint8_t marker = std::uint8_t(b[i + 1]);
            if (marker == 0xFF) {
                ++i;
                continue;
            }
            if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) {
                i += 2;
                continue;
            }
            const std::uint16_t len = be16(b, i + 2);
            const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                             marker != 0xCC;
            if (sof) {
                if (i + 9 > b.size())
                    return std::nullopt;
                return ImageSize{be16(b, i + 7), be16(b, i + 5)};
            }
            i += 2 + len;
        }
    }
    return std::nullopt;
}

std::string encode_png_rgb(std::uint32_t width, std::uint32_t height,
                           const std::vector<std::uint8_t>& pixels)
{
    if (width == 0 || height == 0 || pixels.size() != std::size_t(width) * height * 3)
        throw Error(ErrorKind::invalid_argument, "pixel buffer does not match PNG dimensions");

    std::string raw;
    raw.reserve(std::size_t(height) * (1 + std::size_t(width) * 3));
    for (std::uint32_t y = 0; y < height; ++y) {
        raw.push_back('\0'); // filter: none
        raw.append(reinterpret_cast<const char*>(pixels.data()) + std::size_t(y) * width * 3, width * 3);
    }
    uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
    std::string packed(packed_len, '\0');
    if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_len,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw Error(ErrorKind::io, "zlib compression failed");
    packed.resize(packed_len);

    std::string out("\x89PNG\r\n\x1a\n", 8);
    std::string ihdr;
    put_be32(ihdr, width);
    put_be32(ihdr, height);
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", packed);
    put_chunk(out, "IEND", {});
    return out;
}

} // namespace exhibit
