#pragma once

#include <map>
#include <string>
#include <vector>

namespace lmor {

/// CSV with a header row; numbers use the classic locale and round-trip precision.
class CsvWriter {
public:
    CsvWriter(std::string path, std::vector<std::string> header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    CsvWriter& operator<<(double v);
    CsvWriter& operator<<(long long v);
    CsvWriter& operator<<(int v) { return *this << static_cast<long long>(v); }
    CsvWriter& operator<<(const std::string& s);
    CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
    /// Ends the current row; throws if the column count differs from the header.
    void endrow();
    const std::string& path() const { return path_; }

private:
    void sep();
    std::string path_;
    size_t ncols_, col_ = 0;
    std::string row_, body_;
};

std::string format_double(double v);

/// Plain text key=value lines in insertion order.
class Manifest {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set(const std::string& key, long long value) { set(key, std::to_string(value)); }
    void set(const std::string& key, int value) { set(key, std::to_string(value)); }
    void write(const std::string& path) const;
    const std::vector<std::pair<std::string, std::string>>& entries() const { return kv_; }

private:
    std::vector<std::pair<std::string, std::string>> kv_;
};

/// Creates the directory and its parents.
void ensure_directory(const std::string& dir);
std::string join_path(const std::string& dir, const std::string& file);

}  // namespace lmor
