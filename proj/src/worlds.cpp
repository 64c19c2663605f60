#include "cempac/worlds.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <boost/multiprecision/cpp_int.hpp>

#include "cempac/summation.hpp"

namespace cempac {

namespace {

using boost::multiprecision::cpp_rational;

BigInt factorial(int n) {
    BigInt out = 1;
    for (int i = 2; i <= n; ++i) out *= i;
    return out;
}

BigInt power(const BigInt& base, std::uint64_t exponent) {
    BigInt out = 1;
    for (std::uint64_t i = 0; i < exponent; ++i) out *= base;
    return out;
}

void require_cap(const BigInt& required, std::uint64_t cap, const std::string& what) {
    if (required > cap) {
        throw CapExceeded(what + " exceeds cap " + std::to_string(cap), required.str());
    }
}

std::uint32_t successor(const Dataset& d, const WorldShape& shape, int s, int a, int t, std::uint32_t index) {
    return shape.stationary ? d.sample(s, a, 0, static_cast<int>(index - 1))
                            : d.sample(s, a, t, static_cast<int>(index - 1));
}

bool unit_rewards(const MdpSpec& m) {
    return std::all_of(m.rewards.begin(), m.rewards.end(), [](double r) { return r >= 0.0 && r <= 1.0; });
}

ValueTable finish_average(const std::vector<CompensatedSum>& sums, std::size_t offset, const WorldShape& shape,
                          double count) {
    ValueTable v = ValueTable::zeros(shape.num_states, shape.steps, false);
    for (std::size_t k = 0; k < v.values.size(); ++k) v.values[k] = sums[offset + k].value() / count;
    return v;
}

}  // namespace

WorldShape world_shape(const Dataset& d, int steps) {
    if (d.kind == Kind::nonstationary) {
        if (steps != 0 && steps != d.horizon) {
            throw InvalidInput("worlds over a nonstationary dataset span its full horizon");
        }
        return {d.num_states, d.num_actions, d.horizon, d.n, false};
    }
    if (steps < 1) throw InvalidInput("worlds over a stationary dataset need a positive number of steps");
    return {d.num_states, d.num_actions, steps, d.n, true};
}

void require_world(const World& x, const WorldShape& shape) {
    if (x.indices.size() != shape.coordinates()) {
        throw InvalidInput("world has " + std::to_string(x.indices.size()) + " entries, expected " +
                           std::to_string(shape.coordinates()));
    }
    for (std::size_t c = 0; c < x.indices.size(); ++c) {
        if (x.indices[c] < 1 || x.indices[c] > static_cast<std::uint32_t>(shape.n)) {
            throw InvalidInput("world entry " + std::to_string(c) + " is " + std::to_string(x.indices[c]) +
                               ", outside [1, " + std::to_string(shape.n) + "]");
        }
    }
}

std::string world_to_string(const World& x) {
    const bool digits = std::all_of(x.indices.begin(), x.indices.end(), [](std::uint32_t v) { return v < 10; });
    std::string out;
    for (std::size_t c = 0; c < x.indices.size(); ++c) {
        if (!digits && c > 0) out.push_back(',');
        out += std::to_string(x.indices[c]);
    }
    return out;
}

World world_from_string(std::string_view text, const WorldShape& shape) {
    World x;
    if (text.find(',') == std::string_view::npos) {
        for (char ch : text) {
            if (ch < '0' || ch > '9') throw InvalidInput("world string contains '" + std::string(1, ch) + "'");
            x.indices.push_back(static_cast<std::uint32_t>(ch - '0'));
        }
    } else {
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t end = std::min(text.find(',', start), text.size());
            const std::string_view field = text.substr(start, end - start);
            if (field.empty()) throw InvalidInput("empty field in world string");
            std::uint32_t v = 0;
            for (char ch : field) {
                if (ch < '0' || ch > '9') throw InvalidInput("world string contains '" + std::string(1, ch) + "'");
                v = v * 10 + static_cast<std::uint32_t>(ch - '0');
            }
            x.indices.push_back(v);
            start = end + 1;
        }
    }
    require_world(x, shape);
    return x;
}

MdpSpec world_mdp(const World& x, const Dataset& d, const MdpSpec& skeleton, int steps) {
    if (d.kind == Kind::stationary && steps == 0 && d.num_states > 0 && d.num_actions > 0) {
        steps = static_cast<int>(x.indices.size() / (static_cast<std::size_t>(d.num_states) * d.num_actions));
    }
    const WorldEvaluator ev(d, skeleton, steps);
    const WorldShape& shape = ev.shape();
    require_world(x, shape);
    double v_max = skeleton.v_max;
    if (unit_rewards(skeleton)) v_max = std::min(v_max, static_cast<double>(shape.steps));
    MdpSpec m = MdpSpec::zeros(Kind::nonstationary, shape.num_states, shape.num_actions, shape.steps,
                               skeleton.discount, v_max);
    for (int s = 0; s < shape.num_states; ++s) {
        for (int a = 0; a < shape.num_actions; ++a) {
            for (int t = 0; t < shape.steps; ++t) {
                m.reward(s, a, t) = skeleton.reward(s, a, t);
                m.transition_row(s, a, t)[successor(d, shape, s, a, t, x.indices[shape.coordinate(s, a, t)])] = 1.0;
            }
        }
    }
    return m;
}

WorldEvaluator::WorldEvaluator(const Dataset& d, const MdpSpec& skeleton, int steps)
    : shape_(world_shape(d, steps)), data_(d), discount_(skeleton.discount) {
    require_valid(skeleton);
    if (skeleton.num_states != d.num_states || skeleton.num_actions != d.num_actions) {
        throw InvalidInput("dataset dimensions do not match the skeleton");
    }
    if (d.kind == Kind::nonstationary) {
        if (!skeleton.horizon || *skeleton.horizon != d.horizon) {
            throw InvalidInput("skeleton horizon does not match the dataset");
        }
    } else if (skeleton.kind != Kind::stationary) {
        throw InvalidInput("stationary worlds need a stationary skeleton");
    }
    rewards_.resize(shape_.coordinates());
    for (int s = 0; s < shape_.num_states; ++s) {
        for (int a = 0; a < shape_.num_actions; ++a) {
            for (int t = 0; t < shape_.steps; ++t) rewards_[shape_.coordinate(s, a, t)] = skeleton.reward(s, a, t);
        }
    }
}

void WorldEvaluator::successors(const World& x, std::vector<int>& out) const {
    out.resize(shape_.coordinates());
    successors_from(x, 0, out);
}

void WorldEvaluator::successors_from(const World& x, std::size_t first, std::vector<int>& out) const {
    const int steps = shape_.steps;
    for (std::size_t c = first; c < out.size(); ++c) {
        const int t = static_cast<int>(c % steps);
        const int sa = static_cast<int>(c / steps);
        out[c] = static_cast<int>(successor(data_, shape_, sa / shape_.num_actions, sa % shape_.num_actions, t,
                                            x.indices[c]));
    }
}

void WorldEvaluator::require_policy(const Policy& pi) const {
    if (pi.num_states != shape_.num_states) throw InvalidInput("policy state count does not match the worlds");
    if (pi.kind == Kind::nonstationary ? pi.steps != shape_.steps : pi.steps != 1) {
        throw InvalidInput("policy horizon does not match the worlds");
    }
    if (pi.actions.size() != static_cast<std::size_t>(pi.num_states) * pi.steps) {
        throw InvalidInput("policy action table has the wrong size");
    }
    for (int a : pi.actions) {
        if (a < 0 || a >= shape_.num_actions) throw InvalidInput("policy action out of range");
    }
}

void WorldEvaluator::evaluate(std::span<const int> succ, const Policy& pi, std::span<double> out) const {
    const int S = shape_.num_states;
    for (int t = shape_.steps - 1; t >= 0; --t) {
        for (int s = 0; s < S; ++s) {
            const std::size_t c = shape_.coordinate(s, pi.action(s, t), t);
            const double next = t + 1 < shape_.steps ? out[static_cast<std::size_t>(t + 1) * S + succ[c]] : 0.0;
            out[static_cast<std::size_t>(t) * S + s] = rewards_[c] + discount_ * next;
        }
    }
}

ValueTable WorldEvaluator::evaluate(const World& x, const Policy& pi) const {
    require_world(x, shape_);
    require_policy(pi);
    std::vector<int> succ;
    successors(x, succ);
    ValueTable v = ValueTable::zeros(shape_.num_states, shape_.steps, false);
    evaluate(succ, pi, v.values);
    return v;
}

ValueTable eval_world_set(std::span<const World> worlds, const Policy& pi, const Dataset& d,
                          const MdpSpec& skeleton, int steps) {
    if (worlds.empty()) throw InvalidInput("world set is empty");
    if (d.kind == Kind::stationary && steps == 0 && d.num_states > 0 && d.num_actions > 0) {
        steps = static_cast<int>(worlds.front().indices.size() /
                                 (static_cast<std::size_t>(d.num_states) * d.num_actions));
    }
    const WorldEvaluator ev(d, skeleton, steps);
    ev.require_policy(pi);
    const WorldShape& shape = ev.shape();
    std::vector<CompensatedSum> sums(static_cast<std::size_t>(shape.num_states) * shape.steps);
    std::vector<int> succ;
    std::vector<double> values(sums.size());
    for (const World& x : worlds) {
        require_world(x, shape);
        ev.successors(x, succ);
        ev.evaluate(succ, pi, values);
        for (std::size_t k = 0; k < values.size(); ++k) sums[k].add(values[k]);
    }
    return finish_average(sums, 0, shape, static_cast<double>(worlds.size()));
}

WorldEnumerator::WorldEnumerator(const WorldShape& shape)
    : n_(static_cast<std::uint32_t>(shape.n)) {
    if (shape.n < 1) throw InvalidInput("N must be positive");
    current_.indices.assign(shape.coordinates(), 1);
}

bool WorldEnumerator::next() {
    if (done_) return false;
    if (!started_) {
        started_ = true;
        first_changed_ = 0;
        return true;
    }
    for (std::size_t c = current_.indices.size(); c-- > 0;) {
        if (current_.indices[c] < n_) {
            ++current_.indices[c];
            first_changed_ = c;
            return true;
        }
        current_.indices[c] = 1;
    }
    done_ = true;
    return false;
}

BigInt count_worlds(const WorldShape& shape) { return power(BigInt(shape.n), shape.coordinates()); }

WorldEnumerator enumerate_worlds(const WorldShape& shape, std::uint64_t cap) {
    require_cap(count_worlds(shape), cap, "world enumeration");
    return WorldEnumerator(shape);
}

std::vector<ValueTable> eval_all_worlds(std::span<const Policy> policies, const Dataset& d,
                                        const MdpSpec& skeleton, int steps, WorldFilter filter,
                                        std::uint64_t cap) {
    const WorldEvaluator ev(d, skeleton, steps);
    const WorldShape& shape = ev.shape();
    if (filter == WorldFilter::unbiased && !shape.stationary) {
        throw InvalidInput("the unbiased filter applies to stationary worlds");
    }
    for (const Policy& pi : policies) ev.require_policy(pi);
    WorldEnumerator worlds = enumerate_worlds(shape, cap);

    const std::size_t table = static_cast<std::size_t>(shape.num_states) * shape.steps;
    std::vector<CompensatedSum> sums(table * policies.size());
    std::vector<int> succ(shape.coordinates());
    std::vector<double> values(table);
    std::uint64_t count = 0;
    while (worlds.next()) {
        const World& x = worlds.current();
        ev.successors_from(x, worlds.first_changed(), succ);
        if (filter == WorldFilter::unbiased && is_biased(x, shape)) continue;
        ++count;
        for (std::size_t p = 0; p < policies.size(); ++p) {
            ev.evaluate(succ, policies[p], values);
            for (std::size_t k = 0; k < table; ++k) sums[p * table + k].add(values[k]);
        }
    }
    if (count == 0) throw InvalidInput("no worlds pass the filter");
    std::vector<ValueTable> out;
    out.reserve(policies.size());
    for (std::size_t p = 0; p < policies.size(); ++p) {
        out.push_back(finish_average(sums, p * table, shape, static_cast<double>(count)));
    }
    return out;
}

std::uint64_t count_distinct_world_mdps(const Dataset& d, int steps, std::uint64_t cap) {
    const WorldShape shape = world_shape(d, steps);
    WorldEnumerator worlds = enumerate_worlds(shape, cap);
    std::unordered_set<std::string> seen;
    std::string key(shape.coordinates() * 4, '\0');
    while (worlds.next()) {
        const World& x = worlds.current();
        for (std::size_t c = worlds.first_changed(); c < shape.coordinates(); ++c) {
            const int t = static_cast<int>(c % shape.steps);
            const int sa = static_cast<int>(c / shape.steps);
            const std::uint32_t next =
                successor(d, shape, sa / shape.num_actions, sa % shape.num_actions, t, x.indices[c]);
            for (int b = 0; b < 4; ++b) key[4 * c + b] = static_cast<char>((next >> (8 * b)) & 0xffU);
        }
        seen.insert(key);
    }
    return seen.size();
}

bool is_biased(const World& x, const WorldShape& shape) {
    const int steps = shape.steps;
    for (int b = 0; b < shape.blocks(); ++b) {
        const std::uint32_t* block = x.indices.data() + static_cast<std::size_t>(b) * steps;
        for (int t = 1; t < steps; ++t) {
            for (int u = 0; u < t; ++u) {
                if (block[t] == block[u]) return true;
            }
        }
    }
    return false;
}

PartitionCounts partition_biased(const WorldShape& shape, std::uint64_t cap) {
    WorldEnumerator worlds = enumerate_worlds(shape, cap);
    std::uint64_t biased = 0;
    std::uint64_t unbiased = 0;
    while (worlds.next()) {
        if (is_biased(worlds.current(), shape)) {
            ++biased;
        } else {
            ++unbiased;
        }
    }
    return {BigInt(biased), BigInt(unbiased)};
}

double biased_fraction_exact(const WorldShape& shape) {
    const cpp_rational fraction =
        1 - cpp_rational(count_unbiased(shape), count_worlds(shape));
    return fraction.convert_to<double>();
}

bool shares_coordinate(const World& x, const World& y) {
    const std::size_t k = std::min(x.indices.size(), y.indices.size());
    for (std::size_t c = 0; c < k; ++c) {
        if (x.indices[c] == y.indices[c]) return true;
    }
    return false;
}

bool shares_block_sample(const World& x, const World& y, const WorldShape& shape) {
    const int steps = shape.steps;
    for (int b = 0; b < shape.blocks(); ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * steps;
        for (int t = 0; t < steps; ++t) {
            for (int u = 0; u < steps; ++u) {
                if (x.indices[base + t] == y.indices[base + u]) return true;
            }
        }
    }
    return false;
}

bool is_batch(std::span<const World> worlds, const WorldShape& shape) {
    if (static_cast<int>(worlds.size()) != shape.batch_size() || worlds.empty()) return false;
    for (const World& x : worlds) {
        if (x.indices.size() != shape.coordinates()) return false;
        for (std::uint32_t v : x.indices) {
            if (v < 1 || v > static_cast<std::uint32_t>(shape.n)) return false;
        }
        if (shape.stationary && is_biased(x, shape)) return false;
    }
    for (std::size_t i = 0; i < worlds.size(); ++i) {
        for (std::size_t j = i + 1; j < worlds.size(); ++j) {
            const bool clash = shape.stationary ? shares_block_sample(worlds[i], worlds[j], shape)
                                                : shares_coordinate(worlds[i], worlds[j]);
            if (clash) return false;
        }
    }
    return true;
}

Batch canonicalize(Batch b) {
    std::sort(b.worlds.begin(), b.worlds.end(), [](const World& x, const World& y) {
        return x.indices.front() < y.indices.front();
    });
    return b;
}

Batch canonical_batch(const WorldShape& shape) {
    if (shape.n < 1) throw InvalidInput("N must be positive");
    Batch b;
    for (int j = 1; j <= shape.n; ++j) {
        b.worlds.push_back(World{std::vector<std::uint32_t>(shape.coordinates(), static_cast<std::uint32_t>(j))});
    }
    return b;
}

BatchEnumerator::BatchEnumerator(const WorldShape& shape) : shape_(shape) {
    if (shape.n < 1 || shape.steps < 1) throw InvalidInput("N and steps must be positive");
    std::vector<std::uint32_t> identity(static_cast<std::size_t>(shape.n));
    for (int i = 0; i < shape.n; ++i) identity[i] = static_cast<std::uint32_t>(i);
    const std::size_t lists = shape.stationary ? static_cast<std::size_t>(shape.blocks())
                                               : shape.coordinates() - 1;
    perms_.assign(lists, identity);
    if (shape.batch_size() == 0) done_ = true;
}

bool BatchEnumerator::block_valid(std::size_t b) const {
    const auto& perm = perms_[b];
    const std::size_t used = static_cast<std::size_t>(shape_.batch_size()) * shape_.steps;
    if (!std::is_sorted(perm.begin() + static_cast<std::ptrdiff_t>(used), perm.end())) return false;
    if (b == 0) {
        for (int j = 1; j < shape_.batch_size(); ++j) {
            if (perm[static_cast<std::size_t>(j) * shape_.steps] < perm[static_cast<std::size_t>(j - 1) * shape_.steps]) {
                return false;
            }
        }
    }
    return true;
}

bool BatchEnumerator::advance_block(std::size_t b) {
    auto& perm = perms_[b];
    if (!shape_.stationary) return std::next_permutation(perm.begin(), perm.end());
    do {
        if (!std::next_permutation(perm.begin(), perm.end())) return false;
    } while (!block_valid(b));
    return true;
}

bool BatchEnumerator::advance() {
    for (std::size_t b = perms_.size(); b-- > 0;) {
        if (advance_block(b)) return true;
    }
    return false;
}

void BatchEnumerator::materialize() {
    const int members = shape_.batch_size();
    current_.worlds.assign(static_cast<std::size_t>(members),
                           World{std::vector<std::uint32_t>(shape_.coordinates(), 0)});
    for (int j = 0; j < members; ++j) {
        auto& idx = current_.worlds[j].indices;
        if (shape_.stationary) {
            for (int b = 0; b < shape_.blocks(); ++b) {
                for (int t = 0; t < shape_.steps; ++t) {
                    idx[static_cast<std::size_t>(b) * shape_.steps + t] =
                        perms_[b][static_cast<std::size_t>(j) * shape_.steps + t] + 1;
                }
            }
        } else {
            idx[0] = static_cast<std::uint32_t>(j + 1);
            for (std::size_t c = 1; c < idx.size(); ++c) idx[c] = perms_[c - 1][j] + 1;
        }
    }
}

bool BatchEnumerator::next() {
    if (done_) return false;
    if (!started_) {
        started_ = true;
    } else if (!advance()) {
        done_ = true;
        return false;
    }
    materialize();
    return true;
}

BigInt count_enumerated_batches(const WorldShape& shape) {
    if (!shape.stationary) return power(factorial(shape.n), shape.coordinates() - 1);
    const int members = shape.batch_size();
    if (members == 0) return 0;
    const BigInt per_block = factorial(shape.n) / factorial(shape.n - members * shape.steps);
    return power(per_block, static_cast<std::uint64_t>(shape.blocks())) / factorial(members);
}

BatchEnumerator enumerate_batches(const WorldShape& shape, std::uint64_t cap) {
    require_cap(count_enumerated_batches(shape), cap, "batch enumeration");
    return BatchEnumerator(shape);
}

namespace {

void require_divisible(const WorldShape& shape) {
    if (shape.n < shape.steps || shape.n % shape.steps != 0) {
        throw InvalidInput("stationary batch counts need N >= Hbar and Hbar dividing N");
    }
}

}  // namespace

BigInt count_batches(const WorldShape& shape) {
    if (!shape.stationary) return power(factorial(shape.n), shape.coordinates() - 1);
    require_divisible(shape);
    return power(factorial(shape.n), static_cast<std::uint64_t>(shape.blocks())) / factorial(shape.n / shape.steps);
}

BigInt count_batches_containing(const WorldShape& shape) {
    if (!shape.stationary) return power(factorial(shape.n - 1), shape.coordinates() - 1);
    require_divisible(shape);
    return power(factorial(shape.n - shape.steps), static_cast<std::uint64_t>(shape.blocks())) /
           factorial(shape.n / shape.steps - 1);
}

BigInt count_unbiased(const WorldShape& shape) {
    if (shape.n < shape.steps) return 0;
    return power(factorial(shape.n) / factorial(shape.n - shape.steps), static_cast<std::uint64_t>(shape.blocks()));
}

DecompositionResult batch_decomposition_check(const Dataset& d, const Policy& pi, const MdpSpec& skeleton,
                                              int steps, const Caps& caps) {
    const WorldEvaluator ev(d, skeleton, steps);
    ev.require_policy(pi);
    const WorldShape& shape = ev.shape();

    DecompositionResult out;
    const Policy single[] = {pi};
    out.world_average = eval_all_worlds(single, d, skeleton, steps,
                                        shape.stationary ? WorldFilter::unbiased : WorldFilter::all, caps.worlds)
                            .front();
    out.worlds = shape.stationary ? count_unbiased(shape) : count_worlds(shape);

    BatchEnumerator batches = enumerate_batches(shape, caps.batches);
    const std::size_t table = static_cast<std::size_t>(shape.num_states) * shape.steps;
    std::vector<CompensatedSum> batch_sums(table);
    std::vector<int> succ;
    std::vector<double> values(table);
    std::uint64_t count = 0;
    while (batches.next()) {
        std::vector<CompensatedSum> member_sums(table);
        const auto& members = batches.current().worlds;
        for (const World& x : members) {
            ev.successors(x, succ);
            ev.evaluate(succ, pi, values);
            for (std::size_t k = 0; k < table; ++k) member_sums[k].add(values[k]);
        }
        for (std::size_t k = 0; k < table; ++k) {
            batch_sums[k].add(member_sums[k].value() / static_cast<double>(members.size()));
        }
        ++count;
    }
    if (count == 0) throw InvalidInput("no batches exist for this shape");
    out.batches = count;
    out.batch_average = finish_average(batch_sums, 0, shape, static_cast<double>(count));
    out.max_discrepancy = max_abs_difference(out.world_average, out.batch_average);
    return out;
}

}  // namespace cempac
