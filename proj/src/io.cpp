#include "lmor/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <locale>
#include <sstream>
#include <stdexcept>

namespace lmor {

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(std::string path, std::vector<std::string> header) : path_(std::move(path)), ncols_(header.size())
{
    if (header.empty()) throw std::invalid_argument("CsvWriter: empty header");
    for (size_t i = 0; i < header.size(); ++i) body_ += (i ? "," : "") + header[i];
    body_ += '\n';
}

CsvWriter::~CsvWriter()
{
    std::ofstream out(path_, std::ios::binary);
    out << body_;
}

void CsvWriter::sep()
{
    if (col_++) row_ += ',';
}

CsvWriter& CsvWriter::operator<<(double v)
{
    sep();
    row_ += format_double(v);
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long v)
{
    sep();
    row_ += std::to_string(v);
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s)
{
    if (s.find_first_of(",\"\n") != std::string::npos) throw std::invalid_argument("CsvWriter: field needs quoting: " + s);
    sep();
    row_ += s;
    return *this;
}

void CsvWriter::endrow()
{
    if (col_ != ncols_)
        throw std::logic_error("CsvWriter: row has " + std::to_string(col_) + " fields, header has " + std::to_string(ncols_));
    body_ += row_ + '\n';
    row_.clear();
    col_ = 0;
}

void Manifest::set(const std::string& key, const std::string& value)
{
    if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
        throw std::invalid_argument("Manifest: invalid entry " + key);
    for (auto& kv : kv_)
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    kv_.push_back({key, value});
}

void Manifest::write(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& [k, v] : kv_) out << k << '=' << v << '\n';
}

void ensure_directory(const std::string& dir)
{
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& file)
{
    return (std::filesystem::path(dir) / file).string();
}

}  // namespace lmor
