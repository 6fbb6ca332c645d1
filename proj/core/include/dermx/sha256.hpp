#ifndef DERMX_SHA256_HPP
#define DERMX_SHA256_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dermx {

// Streaming SHA-256, used for manifest content hashes.
class Sha256 {
public:
    Sha256();
    void update(const void* data, size_t len);
    void update(const std::string& s) { update(s.data(), s.size()); }
    void update(const std::vector<uint8_t>& v) { update(v.data(), v.size()); }
    std::string hex_digest();  // finalizes; further updates are invalid

private:
    void process_block(const uint8_t* block);
    uint32_t state_[8];
    uint64_t total_ = 0;
    uint8_t buf_[64];
    size_t buffered_ = 0;
};

std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace dermx

#endif  // DERMX_SHA256_HPP
