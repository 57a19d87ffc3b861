// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exhibit {

inline constexpr std::string_view media_png = "image/png";
inline constexpr std::string_view media_jpeg = "image/jpeg";

bool is_supported_media_type(std::string_view media_type);

/// "image/png" for .png, "image/jpeg" for .jpg/.jpeg (case-insensitive),
/// empty otherwise.
std::string media_type_for_path(const std::filesystem::path& path);

/// Immutable image payload shared by reference; copies are cheap. The
/// content id is derived from the bytes, so equal images share an id.
class ImageData {
public:
    ImageData() = default;
    ImageData(std::string bytes, std::string media_type);

    std::string_view bytes() const noexcept { return bytes_ ? std::string_view(*bytes_) : std::string_view{}; }
    std::size_t size() const noexcept { return bytes_ ? bytes_->size() : 0; }
    const std::string& media_type() const noexcept { return media_type_; }
    const std::string& content_id() const noexcept { return content_id_; }
    bool empty() const noexcept { return size() == 0; }

private:
    std::shared_ptr<const std::string> bytes_;
    std::string media_type_;
    std::string content_id_;
};

struct ImageSize {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
};

/// Reads pixel dimensions from PNG (IHDR) or JPEG (SOFn) headers.
std::optional<ImageSize> image_dimensions(std::string_view bytes);

/// Encodes 8-bit RGB pixels (row-major, 3 bytes per pixel) as a PNG file.
std::string encode_png_rgb(std::uint32_t width, std::uint32_t height,
                           const std::vector<std::uint8_t>& pixels);

} // namespace exhibit
