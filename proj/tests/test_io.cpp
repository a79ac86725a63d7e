#include "lmor/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace lmor;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string temp_dir()
{
    auto d = std::filesystem::temp_directory_path() / "lmor_test_io";
    ensure_directory(d.string());
    return d.string();
}

}  // namespace

TEST(Csv, FormatAndRoundTrip)
{
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
    double x = 0.1 + 0.2;
    EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Csv, WritesHeaderAndRows)
{
    std::string path = join_path(temp_dir(), "t.csv");
    {
        CsvWriter w(path, {"a", "b", "c"});
        w << 1 << 2.5 << "x";
        w.endrow();
        w << 3 << 1e-20 << "y";
        w.endrow();
    }
    EXPECT_EQ(slurp(path), "a,b,c\n1,2.5,x\n3,1e-20,y\n");
}

TEST(Csv, RejectsBadRows)
{
    std::string path = join_path(temp_dir(), "bad.csv");
    CsvWriter w(path, {"a", "b"});
    w << 1;
    EXPECT_THROW(w.endrow(), std::exception);
    EXPECT_THROW(w << "has,comma", std::exception);
}

TEST(Manifest, KeyValueLines)
{
    std::string path = join_path(temp_dir(), "m.manifest");
    Manifest m;
    m.set("name", std::string("run"));
    m.set("n", 3);
    m.set("tol", 1e-6);
    m.write(path);
    EXPECT_EQ(slurp(path), "name=run\nn=3\ntol=1e-06\n");
    EXPECT_EQ(m.entries().size(), 3u);
}
