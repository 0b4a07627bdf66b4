#include "kkl/kernels.hpp"

#include <charconv>
#include <map>
#include <sstream>

namespace kkl {

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ArgumentError("kernel spec: bad number for '" + key + "': " + text);
    }
}

int parse_int(const std::string& key, const std::string& text) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ArgumentError("kernel spec: bad integer for '" + key + "': " + text);
    return v;
}

}  // namespace

std::string kernel_spec(const RadialKernel<double>& kernel) {
    std::string out;
    switch (kernel.family()) {
        case KernelFamily::Wendland:
            out = "wendland dim=" + std::to_string(kernel.dim()) + " k=" + std::to_string(kernel.smoothness());
            break;
        case KernelFamily::Gaussian:
            out = "gaussian";
            break;
        case KernelFamily::Matern: {
            const char* nu = kernel.matern_order() == MaternOrder::Half          ? "1/2"
                             : kernel.matern_order() == MaternOrder::ThreeHalves ? "3/2"
                                                                                 : "5/2";
            out = std::string("matern nu=") + nu;
            break;
        }
    }
    return out + " sigma=" + format_double(kernel.bandwidth());
}

RadialKernel<double> parse_kernel_spec(const std::string& spec) {
    std::istringstream is(spec);
    std::string family;
    is >> family;
    std::map<std::string, std::string> fields;
    for (std::string tok; is >> tok;) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) throw ArgumentError("kernel spec: expected key=value, got '" + tok + "'");
        fields[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    auto take = [&](const std::string& key) {
        const auto it = fields.find(key);
        if (it == fields.end()) throw ArgumentError("kernel spec '" + spec + "': missing " + key);
        std::string v = it->second;
        fields.erase(it);
        return v;
    };
    const double sigma = parse_double("sigma", take("sigma"));
    RadialKernel<double> out = RadialKernel<double>::gaussian(1.0);
    if (family == "gaussian") {
        out = RadialKernel<double>::gaussian(sigma);
    } else if (family == "wendland") {
        const int dim = parse_int("dim", take("dim"));
        const int k = parse_int("k", take("k"));
        out = RadialKernel<double>::wendland(dim, k, sigma);
    } else if (family == "matern") {
        const std::string nu = take("nu");
        MaternOrder order;
        if (nu == "1/2" || nu == "0.5")
            order = MaternOrder::Half;
        else if (nu == "3/2" || nu == "1.5")
            order = MaternOrder::ThreeHalves;
        else if (nu == "5/2" || nu == "2.5")
            order = MaternOrder::FiveHalves;
        else
            throw ArgumentError("kernel spec: unsupported Matern order " + nu);
        out = RadialKernel<double>::matern(order, sigma);
    } else {
        throw ArgumentError("kernel spec: unknown family '" + family + "'");
    }
    if (!fields.empty()) throw ArgumentError("kernel spec: unknown key '" + fields.begin()->first + "'");
    return out;
}

}  // namespace kkl
