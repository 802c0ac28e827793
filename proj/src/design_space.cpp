// SPDX-License-Identifier: Apache-2.0
#include "axbxp/design_space.hpp"

#include <algorithm>

#include <boost/multiprecision/cpp_int.hpp>

namespace axbxp {

using boost::multiprecision::cpp_int;

const char* mode_name(Mode m) {
    return m == Mode::Static ? "static" : "dynamic";
}

Mode parse_mode(const std::string& name) {
    if (name == "static")
        return Mode::Static;
    if (name == "dynamic")
        return Mode::Dynamic;
    raise(Errc::config_error, "mode must be 'static' or 'dynamic', got '" + name + "'");
}

std::string AxbxpConfig::tuple_str() const {
    return "(" + std::to_string(k) + "," + std::to_string(kept_w) + "," + std::to_string(kept_a) + ")";
}

bool in_pruned_space(const AxbxpConfig& c) {
    if (c.k < 2 || c.k > 4)
        return false;
    const int n = block_count(c.k);
    return c.kept_w >= 1 && c.kept_a >= 1 && c.kept_w <= c.kept_a && c.kept_a <= n &&
           c.kept_w * c.kept_a <= n;
}

bool is_exact_blocked(const AxbxpConfig& c) {
    if (c.k < 2 || c.k > 4)
        return false;
    const int n = block_count(c.k);
    return c.kept_w == n && c.kept_a == n;
}

void validate_config(const AxbxpConfig& c) {
    if (c.k < 2 || c.k > 4)
        raise(Errc::config_error, "block width must be 2, 3 or 4");
    if (!in_pruned_space(c))
        raise(Errc::config_error, "configuration " + c.tuple_str() + " is not in the pruned design space");
}

void validate_engine_config(const AxbxpConfig& c) {
    if (c.k < 2 || c.k > 4)
        raise(Errc::config_error, "block width must be 2, 3 or 4");
    if (!in_pruned_space(c) && !is_exact_blocked(c))
        raise(Errc::config_error, "configuration " + c.tuple_str() +
                                      " is neither in the pruned design space nor exact blocked");
}

namespace {

cpp_int binomial(int n, int r) {
    if (r < 0 || r > n)
        return 0;
    cpp_int result = 1;
    for (int i = 0; i < r; ++i) {
        result *= n - i;
        result /= i + 1;
    }
    return result;
}

} // namespace

std::string size_unconstrained(int bw) {
    if (bw < 1)
        raise(Errc::config_error, "bit width must be >= 1");
    cpp_int total = 0;
    for (int n = 1; n <= bw; ++n)
        for (int l = 1; l <= n * n; ++l)
            total += binomial(n * n, l);
    return total.str();
}

std::uint64_t size_constrained() {
    cpp_int total = 0;
    for (int n = 2; n <= 4; ++n)
        for (int l = 1; l <= n; ++l)
            total += binomial(n * n, l);
    return total.convert_to<std::uint64_t>();
}

std::uint64_t size_pruned_eq5() {
    cpp_int total = 0;
    for (int n = 2; n <= 4; ++n)
        for (int kept_a = 1; kept_a <= n; ++kept_a)
            for (int kept_w = 1; kept_w <= kept_a; ++kept_w)
                total += binomial(n, kept_a) * binomial(n, kept_w);
    return total.convert_to<std::uint64_t>();
}

DesignSpace enumerate_pruned(std::optional<int> k, Mode mode) {
    if (k)
        block_count(*k); // validates the filter
    DesignSpace space;
    space.level = ConstraintLevel::Pruned;
    for (int kk = 2; kk <= 4; ++kk) {
        if (k && *k != kk)
            continue;
        const int n = block_count(kk);
        for (int kept_a = 1; kept_a <= n; ++kept_a)
            for (int kept_w = 1; kept_w <= kept_a; ++kept_w)
                if (kept_w * kept_a <= n)
                    space.configs.push_back(AxbxpConfig{kk, kept_w, kept_a, mode});
    }
    std::sort(space.configs.begin(), space.configs.end(),
              [](const AxbxpConfig& a, const AxbxpConfig& b) {
                  if (a.k != b.k)
                      return a.k < b.k;
                  if (a.l() != b.l())
                      return a.l() < b.l();
                  if (a.kept_a != b.kept_a)
                      return a.kept_a < b.kept_a;
                  return a.kept_w < b.kept_w;
              });
    return space;
}

} // namespace axbxp
