#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testutil {

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) { return rng() % n; }

inline double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// Printable ASCII soup with occasional URL/email/phone-ish fragments mixed in.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_len = 80) {
    static const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,@+-()/:!?;#\t";
    static const std::vector<std::string> fragments = {
        "http://x.io/a", "www.jobs.example.com/p?id=1", "hr@corp.example.org",
        "+1 (555) 123-4567", "555.123.4567", "  ", "c++", "r&d",
    };
    std::string out;
    const std::size_t len = pick(rng, max_len);
    for (std::size_t i = 0; i < len; ++i) {
        if (unit(rng) < 0.05) {
            out += fragments[pick(rng, fragments.size())];
        } else {
            out.push_back(alphabet[pick(rng, alphabet.size())]);
        }
    }
    return out;
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("titlenorm_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testutil
