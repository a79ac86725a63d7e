#include "lmor/fem.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lmor {

std::string default_variant_config()
{
    return std::string(LMOR_DATA_DIR) + "/channels_variant.cfg";
}

VariantGeometry load_variant_geometry(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open geometry config " + path);
    VariantGeometry g;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        std::string key;
        if (!(ls >> key)) continue;
        auto fail = [&](const std::string& what) {
            return std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
        };
        if (line.find('=') != std::string::npos) {
            std::string eq;
            double v;
            if (!(ls >> eq >> v) || eq != "=") throw fail("expected 'key = value'");
            if (key == "sigma_low") g.sigma_low = v;
            else if (key == "sigma_high") g.sigma_high = v;
            else if (key == "f_value") g.f_value = v;
            else throw fail("unknown key " + key);
            continue;
        }
        std::string sign;
        Rect r{};
        if (!(ls >> sign >> r.x0 >> r.x1 >> r.y0 >> r.y1) || (sign != "+" && sign != "-"))
            throw fail("expected '<target> <+|-> x0 x1 y0 y1'");
        if (r.x1 <= r.x0 || r.y1 <= r.y0) throw fail("empty rectangle");
        Region* target = key == "high" ? &g.high : key == "f_plus" ? &g.f_plus : key == "f_minus" ? &g.f_minus : nullptr;
        if (!target) throw fail("unknown region target " + key);
        if (sign == "+") target->add(r);
        else target->remove(r);
    }
    if (g.sigma_low <= 0 || g.sigma_high < g.sigma_low) throw std::runtime_error(path + ": need 0 < sigma_low <= sigma_high");
    return g;
}

}  // namespace lmor
