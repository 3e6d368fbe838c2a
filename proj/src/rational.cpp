#include "carpetlab/rational.hpp"

#include <cmath>
#include <cstdint>

namespace carpetlab {

Rat rat_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rat_from_double: non-finite");
    if (x == 0.0) return Rat(0);
    int exp = 0;
    double m = std::frexp(x, &exp);  // x = m * 2^exp, |m| in [0.5, 1)
    // 53 doublings make the mantissa integral.
    std::int64_t mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    exp -= 53;
    Rat r(mant);
    if (exp >= 0) {
        r *= Rat(Int(1) << exp);
    } else {
        r /= Rat(Int(1) << (-exp));
    }
    return r;
}

Int rat_floor(const Rat& r) {
    Int q = numerator(r) / denominator(r);
    if (r < 0 && q * denominator(r) != numerator(r)) --q;
    return q;
}

std::string rat_to_string(const Rat& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

Rat parse_rat(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("parse_rat: empty");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Int num(s.substr(0, slash));
        Int den(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("parse_rat: zero denominator");
        return Rat(num) / Rat(den);
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        std::string head = s.substr(0, dot), tail = s.substr(dot + 1);
        if (head.empty() || head == "-" || head == "+") head += "0";
        Rat r{Int(head)};
        Rat scale(1);
        for (char c : tail) {
            if (c < '0' || c > '9') throw std::invalid_argument("parse_rat: bad decimal");
            scale /= 10;
            Rat digit(c - '0');
            r += (r < 0 || head[0] == '-' ? -digit : digit) * scale;
        }
        return r;
    }
    return Rat(Int(s));
}

std::string rat_to_decimal(const Rat& r, int digits) {
    bool neg = r < 0;
    Rat a = neg ? -r : r;
    Int scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    Int scaled = rat_floor(a * Rat(scale));
    Int ip = scaled / scale, fp = scaled % scale;
    std::string frac = fp.str();
    while ((int)frac.size() < digits) frac.insert(frac.begin(), '0');
    std::string out = ip.str();
    if (digits > 0) out += "." + frac;
    return neg && scaled != 0 ? "-" + out : out;
}

}  // namespace carpetlab
