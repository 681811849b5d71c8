#include "hartogs/complexcore.hpp"

#include "hartogs/format.hpp"

namespace hartogs {

std::string format_complex(Complex z) {
    std::string s = format_double(z.real());
    if (z.imag() >= 0.0)
        s += "+" + format_double(z.imag()) + "i";
    else
        s += "-" + format_double(-z.imag()) + "i";
    return s;
}

std::string format_point(const ComplexPoint& z) {
    std::string s = "(";
    for (int k = 0; k < z.dim(); ++k) {
        if (k > 0) s += ", ";
        s += format_complex(z[k]);
    }
    s += ")";
    return s;
}

}  // namespace hartogs
