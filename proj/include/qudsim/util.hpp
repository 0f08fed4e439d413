#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qudsim {

// Error taxonomy shared across modules. The CLI maps these onto exit codes.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SchemaError : std::runtime_error {
    std::string path;  // JSON-pointer-ish location of the offending value
    SchemaError(std::string p, const std::string& msg)
        : std::runtime_error(p + ": " + msg), path(std::move(p)) {}
};

struct MissingArtifactError : std::runtime_error {
    std::string artifact;
    explicit MissingArtifactError(std::string what_is_missing)
        : std::runtime_error("missing artifact: " + what_is_missing),
          artifact(std::move(what_is_missing)) {}
};

struct BackendError : std::runtime_error {
    explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an LLM response cannot be interpreted even after the repair
// chain; carries the raw transcript for audit.
struct ParseError : std::runtime_error {
    std::string transcript;
    ParseError(const std::string& msg, std::string raw_transcript)
        : std::runtime_error(msg), transcript(std::move(raw_transcript)) {}
};

struct MissingSlotError : std::runtime_error {
    std::string slot;
    explicit MissingSlotError(std::string slot_name)
        : std::runtime_error("missing prompt slot: {" + slot_name + "}"),
          slot(std::move(slot_name)) {}
};

namespace util {

// Collapses every run of whitespace to a single space and trims the ends.
std::string normalize_whitespace(std::string_view text);

std::string to_lower(std::string_view text);

bool is_space_byte(char c);

std::string sha256_hex(std::string_view data);
std::vector<unsigned char> sha256_bytes(std::string_view data);

// Fisher-Yates with a splitmix64 stream so the order does not depend on the
// standard library's shuffle implementation.
std::vector<std::size_t> shuffled_indices(std::size_t count, std::uint64_t seed);

// Runs fn(0..count-1) on up to `width` worker threads. Exceptions from
// workers stop the remaining items and the first one is rethrown.
void parallel_for(std::size_t count, unsigned width,
                  const std::function<void(std::size_t)>& fn);

std::string iso8601_utc_now();

std::string read_file(const std::filesystem::path& path);
// Writes through a sibling temp file and renames, so readers never observe
// a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // leading path prefix, possibly empty
};
SplitUrl split_url(const std::string& url);

}  // namespace util
}  // namespace qudsim
