#pragma once

#include <filesystem>
#include <random>
#include <string>

// Shared helpers for the test binaries.
namespace testsup {

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path() / "qudsim-tests";
        std::filesystem::create_directories(base);
        static std::atomic<unsigned> counter{0};
        path_ = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string random_word(std::mt19937& rng, int min_len = 1, int max_len = 8) {
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<int> ch(0, 25);
    std::string w;
    int n = len(rng);
    for (int i = 0; i < n; ++i) w.push_back(static_cast<char>('a' + ch(rng)));
    return w;
}

// Random plain prose: capitalized words, terminal periods, occasional
// paragraph breaks. Safe for the sentence splitter (no abbreviations).
inline std::string random_prose(std::mt19937& rng, int sentences) {
    std::uniform_int_distribution<int> words(2, 9);
    std::uniform_int_distribution<int> para(0, 4);
    std::string text;
    for (int s = 0; s < sentences; ++s) {
        int n = words(rng);
        for (int w = 0; w < n; ++w) {
            std::string word = random_word(rng, 2, 7);
            if (w == 0) word[0] = static_cast<char>(word[0] - 'a' + 'A');
            text += word;
            text += (w + 1 == n) ? "." : " ";
        }
        if (s + 1 < sentences) text += (para(rng) == 0) ? "\n\n" : " ";
    }
    return text;
}

}  // namespace testsup
