#include "lmor/experiments.hpp"
#include "lmor/io.hpp"

#include <cstring>
#include <exception>
#include <iostream>
#include <string>

int main(int argc, char** argv)
{
    lmor::RunOptions opt;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--out") && i + 1 < argc) opt.out = argv[++i];
        else if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc) opt.jobs = std::stoi(argv[++i]);
    }
    if (!opt.out.empty()) lmor::ensure_directory(opt.out);
    bool ok = true;
    try {
        for (const auto& c : lmor::run_acceptance(opt)) {
            std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << c.detail << std::endl;
            ok = ok && c.pass;
        }
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    return ok ? 0 : 1;
}
