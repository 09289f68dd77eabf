#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "errors.hpp"

namespace cascade
{

using BigInt = boost::multiprecision::cpp_int;

inline std::vector<int> divisors(int n)
{
    std::vector<int> out;
    for (int d = 1; d <= n; ++d)
        if (n % d == 0) out.push_back(d);
    return out;
}

inline int mobius(int n)
{
    int result = 1;
    for (int p = 2; p * p <= n; ++p)
    {
        if (n % p != 0) continue;
        n /= p;
        if (n % p == 0) return 0;
        result = -result;
    }
    if (n > 1) result = -result;
    return result;
}

/// Number of points of least period k of the full shift on m symbols:
/// sum over d | k of mu(k/d) m^d.
inline BigInt least_period_points(int m, int k)
{
    if (m < 2 || k < 1) throw BadParameter("least_period_points needs m >= 2 and k >= 1");
    BigInt total = 0;
    for (int d : divisors(k))
    {
        const int mu = mobius(k / d);
        if (mu == 0) continue;
        BigInt power = boost::multiprecision::pow(BigInt(m), static_cast<unsigned>(d));
        if (mu > 0)
            total += power;
        else
            total -= power;
    }
    return total;
}

/// Number of nonflip period-k orbits of the tent map via the recursion
/// Gamma(1,k) = (zeta(2,k)/k - L(k)) / 2, where L(k) sums Gamma(1,j) over
/// j < k with k/j a power of two.
inline BigInt gamma_1(int k)
{
    if (k < 1) throw BadParameter("gamma_1 needs k >= 1");
    static std::mutex mutex;
    static std::map<int, BigInt> memo;
    {
        std::lock_guard<std::mutex> lock(mutex);
        if (auto it = memo.find(k); it != memo.end()) return it->second;
    }
    BigInt lower = 0;
    for (int j = k; j % 2 == 0;)
    {
        j /= 2;
        lower += gamma_1(j);
    }
    const BigInt zeta = least_period_points(2, k);
    if (zeta % k != 0) throw InternalError("zeta(2," + std::to_string(k) + ") not divisible by k");
    const BigInt twice = zeta / k - lower;
    if (twice % 2 != 0 || twice < 0)
        throw InternalError("Gamma(1," + std::to_string(k) + ") recursion produced a non-integer");
    const BigInt value = twice / 2;
    std::lock_guard<std::mutex> lock(mutex);
    memo.emplace(k, value);
    return value;
}

/// Calls `visit` for every Lyndon word of exact length k over {0..alphabet-1},
/// in lexicographic order. Lyndon words are the minimal rotations of the
/// aperiodic necklaces, so each least-period-k orbit of the full shift is
/// visited once.
inline void for_each_lyndon_word(int alphabet, int k, const std::function<void(const std::vector<int>&)>& visit)
{
    if (alphabet < 1 || k < 1) return;
    std::vector<int> w{-1};
    w.reserve(static_cast<std::size_t>(k));
    while (!w.empty())
    {
        ++w.back();
        const std::size_t m = w.size();
        if (static_cast<int>(m) == k) visit(w);
        while (static_cast<int>(w.size()) < k) w.push_back(w[w.size() - m]);
        while (!w.empty() && w.back() == alphabet - 1) w.pop_back();
    }
}

inline std::string word_to_string(const std::vector<int>& w, const std::vector<std::string>& names = {})
{
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i)
    {
        if (!names.empty())
        {
            if (i) out += ' ';
            out += names.at(static_cast<std::size_t>(w[i]));
        }
        else
        {
            out += std::to_string(w[i]);
            if (i + 1 < w.size()) out += ',';
        }
    }
    return out;
}

/// Canonical (lexicographically least) representative of a cyclic word.
struct SymbolNecklace
{
    std::vector<int> word;
    int length = 0;
    int least_period = 0;
    /// product of derivative signs over one cycle; per coordinate for T_N
    std::vector<int> signs;

    bool nonflip() const
    {
        int negative = 0;
        for (int s : signs) negative += s < 0;
        return negative % 2 == 0;
    }
};

struct NecklaceCensus
{
    std::int64_t nonflip_count = 0;
    std::int64_t flip_count = 0;
    std::vector<SymbolNecklace> necklaces;
};

enum class SymbolicModel
{
    tent,    ///< {L, R}; R has negative slope
    cubic,   ///< {1_L, -1, 1_R}; the middle symbol has negative slope
    product  ///< {L, R}^N, symbol bit i is coordinate i
};

namespace detail
{

inline NecklaceCensus necklace_census(SymbolicModel model, int coordinates, int k, bool keep_words)
{
    const int alphabet = model == SymbolicModel::tent ? 2 : model == SymbolicModel::cubic ? 3 : 1 << coordinates;
    NecklaceCensus census;
    for_each_lyndon_word(alphabet, k, [&](const std::vector<int>& w) {
        std::vector<int> signs;
        if (model == SymbolicModel::product)
        {
            signs.assign(static_cast<std::size_t>(coordinates), 1);
            for (int s : w)
                for (int c = 0; c < coordinates; ++c)
                    if ((s >> c) & 1) signs[static_cast<std::size_t>(c)] = -signs[static_cast<std::size_t>(c)];
        }
        else
        {
            // symbol 1 is R for the tent map and the middle branch for the cubic model
            int sign = 1;
            for (int s : w)
                if (s == 1) sign = -sign;
            signs.push_back(sign);
        }
        SymbolNecklace n{w, k, k, std::move(signs)};
        if (n.nonflip())
            ++census.nonflip_count;
        else
            ++census.flip_count;
        if (keep_words) census.necklaces.push_back(std::move(n));
    });
    return census;
}

} // namespace detail

/// Signed necklaces of least period k for the tent map (exhaustive, k <= 24).
inline NecklaceCensus tent_necklace_census(int k, bool keep_words = true)
{
    if (k < 1) throw BadParameter("tent_necklace_census needs k >= 1");
    if (k > 24) throw TooLarge("tent enumeration is limited to k <= 24");
    return detail::necklace_census(SymbolicModel::tent, 1, k, keep_words);
}

/// Nonflip least-period-k orbit count of the product of N tent maps.
inline std::int64_t gamma_N(int n, int k, int guard = 24)
{
    if (n < 1 || k < 1) throw BadParameter("gamma_N needs N >= 1 and k >= 1");
    if (n * k > guard) throw TooLarge("Gamma(N,k) enumeration limited to N*k <= " + std::to_string(guard));
    return detail::necklace_census(SymbolicModel::product, n, k, false).nonflip_count;
}

/// Nonflip least-period-k orbit count of the slope-3 three-branch map.
inline std::int64_t cubic_nonflip_count(int k)
{
    if (k < 1) throw BadParameter("cubic_nonflip_count needs k >= 1");
    if (k > 15) throw TooLarge("cubic enumeration is limited to k <= 15");
    return detail::necklace_census(SymbolicModel::cubic, 1, k, false).nonflip_count;
}

/// Full census row for the `count` table.
struct CountRow
{
    int k = 0;
    BigInt zeta;
    BigInt orbits;
    std::int64_t nonflip = 0;
    std::int64_t flip = 0;
};

inline CountRow count_row(SymbolicModel model, int coordinates, int k)
{
    NecklaceCensus c;
    int alphabet = 2;
    switch (model)
    {
    case SymbolicModel::tent: c = tent_necklace_census(k, false); break;
    case SymbolicModel::cubic:
        if (k > 15) throw TooLarge("cubic enumeration is limited to k <= 15");
        c = detail::necklace_census(model, 1, k, false);
        alphabet = 3;
        break;
    case SymbolicModel::product:
        if (coordinates * k > 24) throw TooLarge("Gamma(N,k) enumeration limited to N*k <= 24");
        c = detail::necklace_census(model, coordinates, k, false);
        alphabet = 1 << coordinates;
        break;
    }
    CountRow row;
    row.k = k;
    row.zeta = least_period_points(alphabet, k);
    row.orbits = row.zeta / k;
    row.nonflip = c.nonflip_count;
    row.flip = c.flip_count;
    if (BigInt(c.nonflip_count + c.flip_count) != row.orbits)
        throw InternalError("necklace enumeration disagrees with the Moebius count at k=" + std::to_string(k));
    return row;
}

} // namespace cascade
