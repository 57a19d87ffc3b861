// SPDX-License-Identifier: Apache-2.0
#include "exhibit/checksum.hpp"

#include "exhibit/error.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <fstream>
#include <iterator>
#include <vector>

namespace exhibit {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::duplicate_id: return "duplicate_id";
        case ErrorKind::dimension_mismatch: return "dimension_mismatch";
        case ErrorKind::empty_index: return "empty_index";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::corrupt_file: return "corrupt_file";
        case ErrorKind::version_mismatch: return "version_mismatch";
        case ErrorKind::provider_unreachable: return "provider_unreachable";
        case ErrorKind::malformed_response: return "malformed_response";
        case ErrorKind::unsupported_media_type: return "unsupported_media_type";
        case ErrorKind::oversize_payload: return "oversize_payload";
        case ErrorKind::unknown_model: return "unknown_model";
        case ErrorKind::configuration: return "configuration";
        case ErrorKind::invalid_history: return "invalid_history";
        case ErrorKind::malformed_model_output: return "malformed_model_output";
        case ErrorKind::manifest_parse: return "manifest_parse";
        case ErrorKind::manifest_not_found: return "manifest_not_found";
        case ErrorKind::script_exhausted: return "script_exhausted";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

Sha256Digest sha256(std::span<const std::uint8_t> bytes)
{
    Sha256Digest digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorKind::io, "sha256 failed");
    return digest;
}

Sha256Digest sha256(std::string_view bytes)
{
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

std::string sha256_hex(std::string_view bytes)
{
    auto d = sha256(bytes);
    return to_hex(d);
}

std::string base64_encode(std::string_view bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(bytes.data()),
                            static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text)
{
    if (text.size() % 4 != 0)
        throw Error(ErrorKind::invalid_argument, "base64 input length is not a multiple of 4");
    std::string out(3 * text.size() / 4, '\0');
    int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                            reinterpret_cast<const unsigned char*>(text.data()),
                            static_cast<int>(text.size()));
    if (n < 0)
        throw Error(ErrorKind::invalid_argument, "malformed base64 input");
    // EVP_DecodeBlock does not account for padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string random_hex(std::size_t n_bytes)
{
    std::vector<std::uint8_t> buf(n_bytes);
    if (RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1)
        throw Error(ErrorKind::io, "random source unavailable");
    return to_hex(buf);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorKind::io, "short write to " + path.string());
}

} // namespace exhibit
