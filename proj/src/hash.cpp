#include "shroud/hash.hpp"

#include "shroud/error.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <array>
#include <cstdio>
#include <memory>

namespace shroud {
namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

std::string to_hex(std::span<const unsigned char> digest)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (unsigned char c : digest) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 15]);
    }
    return out;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new())
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) fail(Errc::Io, "sha256 init failed");
    }
    void update(const void* data, size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    std::string hex()
    {
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), digest.data(), &len);
        return to_hex({digest.data(), len});
    }

private:
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

} // namespace

std::string sha256_hex(std::span<const uint8_t> bytes)
{
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_hex(std::string_view text)
{
    Sha256 h;
    h.update(text.data(), text.size());
    return h.hex();
}

std::string image_hash(const ImageBuffer& img)
{
    Sha256 h;
    char dims[32];
    const int n = std::snprintf(dims, sizeof dims, "%ux%u:", img.width(), img.height());
    h.update(dims, size_t(n));
    h.update(img.data().data(), img.data().size());
    return h.hex();
}

std::string base64_encode(std::span<const uint8_t> bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), int(bytes.size()));
    out.resize(size_t(n));
    return out;
}

std::vector<uint8_t> base64_decode(std::string_view text)
{
    std::string clean;
    clean.reserve(text.size());
    for (char c : text)
        if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
    if (clean.size() % 4 != 0) fail(Errc::CorruptData, "base64 length not a multiple of 4");
    std::vector<uint8_t> out(clean.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), int(clean.size()));
    if (n < 0) fail(Errc::CorruptData, "invalid base64");
    size_t len = size_t(n);
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    if (!clean.empty() && clean.back() == '=') --len;
    if (clean.size() > 1 && clean[clean.size() - 2] == '=') --len;
    out.resize(len);
    return out;
}

uint64_t fnv1a64(std::string_view text) noexcept
{
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string random_token(size_t bytes)
{
    std::vector<uint8_t> buf(bytes);
    if (RAND_bytes(buf.data(), int(buf.size())) != 1) fail(Errc::Io, "random source unavailable");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (uint8_t b : buf) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 15]);
    }
    return out;
}

} // namespace shroud
