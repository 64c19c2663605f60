#include "cempac/sampling.hpp"


#include "cempac/io.hpp"
#include "cempac/rng.hpp"

namespace cempac {

namespace {

constexpr std::uint64_t kSampleDomain = 0x73616d706c65ULL;  // "sample"
constexpr const char* kBase64Encoding = "u32le-base64";
constexpr const char* kArrayEncoding = "array";

}  // namespace

Dataset Dataset::zeros(Kind kind, int states, int actions, int horizon, int n) {
    if (states < 1 || actions < 1) throw InvalidInput("dataset needs at least one state and action");
    if (n < 1) throw InvalidInput("samples per tuple must be positive");
    if (kind == Kind::nonstationary && horizon < 1) {
        throw InvalidInput("nonstationary dataset needs a positive horizon");
    }
    Dataset d;
    d.kind = kind;
    d.num_states = states;
    d.num_actions = actions;
    d.horizon = kind == Kind::nonstationary ? horizon : 0;
    d.n = n;
    d.samples.assign(d.tuple_count() * static_cast<std::size_t>(n), 0);
    return d;
}

std::vector<std::string> validate_dataset(const Dataset& d) {
    std::vector<std::string> issues;
    if (d.num_states < 1 || d.num_actions < 1) issues.push_back("dimensions must be positive");
    if (d.n < 1) issues.push_back("samples per tuple must be positive");
    if (d.kind == Kind::nonstationary && d.horizon < 1) issues.push_back("horizon must be positive");
    if (d.kind == Kind::stationary && d.horizon != 0) issues.push_back("stationary dataset carries a horizon");
    if (!issues.empty()) return issues;
    if (d.samples.size() != d.tuple_count() * static_cast<std::size_t>(d.n)) {
        issues.push_back("sample tensor has " + std::to_string(d.samples.size()) + " entries, expected " +
                         std::to_string(d.tuple_count() * static_cast<std::size_t>(d.n)));
        return issues;
    }
    for (std::size_t k = 0; k < d.samples.size(); ++k) {
        if (d.samples[k] >= static_cast<std::uint32_t>(d.num_states)) {
            issues.push_back("sample at flat offset " + std::to_string(k) + " names state " +
                             std::to_string(d.samples[k]));
            break;
        }
    }
    return issues;
}

Dataset sample_dataset(const MdpSpec& m, int n, std::uint64_t seed, const Caps& caps) {
    require_valid(m);
    if (n < 1) throw InvalidInput("samples per tuple must be positive");
    if (m.kind == Kind::nonstationary && !m.horizon) {
        throw InvalidInput("nonstationary sampling needs a finite horizon");
    }
    const std::uint64_t total = static_cast<std::uint64_t>(m.tuple_count()) * static_cast<std::uint64_t>(n);
    if (total / static_cast<std::uint64_t>(n) != m.tuple_count() || total > caps.sample_budget) {
        throw CapExceeded("dataset exceeds the sample budget " + std::to_string(caps.sample_budget),
                          std::to_string(n) + "*" + std::to_string(m.tuple_count()));
    }
    Dataset d = Dataset::zeros(m.kind, m.num_states, m.num_actions, m.horizon.value_or(0), n);
    d.source_seed = seed;
    d.source_mdp_digest = mdp_digest(m);
    for (int s = 0; s < m.num_states; ++s) {
        for (int a = 0; a < m.num_actions; ++a) {
            for (int t = 0; t < d.layers(); ++t) {
                const auto row = m.transition_row(s, a, t);
                for (int i = 0; i < n; ++i) {
                    const std::uint64_t key = stream_key(
                        seed, {kSampleDomain, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(a),
                               static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i)});
                    d.sample(s, a, t, i) = static_cast<std::uint32_t>(draw_categorical(row, unit_interval(key)));
                }
            }
        }
    }
    return d;
}

std::vector<int> empirical_counts(const Dataset& d, int s, int a, int t) {
    if (s < 0 || s >= d.num_states || a < 0 || a >= d.num_actions) {
        throw InvalidInput("state or action index out of range");
    }
    if (d.kind == Kind::nonstationary ? (t < 0 || t >= d.horizon) : t != 0) {
        throw InvalidInput("time index out of range");
    }
    std::vector<int> counts(static_cast<std::size_t>(d.num_states), 0);
    for (int i = 0; i < d.n; ++i) ++counts.at(d.sample(s, a, t, i));
    return counts;
}

Dataset pooled_view(const Dataset& d) {
    if (d.kind != Kind::nonstationary) throw InvalidInput("only nonstationary datasets can be pooled");
    const int H = d.horizon;
    Dataset out = Dataset::zeros(Kind::stationary, d.num_states, d.num_actions, 0, d.n * H);
    out.source_seed = d.source_seed;
    out.source_mdp_digest = d.source_mdp_digest;
    for (int s = 0; s < d.num_states; ++s) {
        for (int a = 0; a < d.num_actions; ++a) {
            for (int i = 0; i < d.n; ++i) {
                for (int t = 0; t < H; ++t) out.sample(s, a, 0, i * H + t) = d.sample(s, a, t, i);
            }
        }
    }
    return out;
}

nlohmann::json dataset_to_json(const Dataset& d, bool plain_samples) {
    using nlohmann::json;
    json j{{"kind", to_string(d.kind)},
           {"S", d.num_states},
           {"A", d.num_actions},
           {"N", d.n},
           {"source_seed", d.source_seed},
           {"source_mdp_digest", d.source_mdp_digest}};
    if (d.kind == Kind::nonstationary) j["H"] = d.horizon;
    if (plain_samples) {
        json outer = json::array();
        for (int s = 0; s < d.num_states; ++s) {
            json per_s = json::array();
            for (int a = 0; a < d.num_actions; ++a) {
                json per_a = json::array();
                for (int t = 0; t < d.layers(); ++t) {
                    std::vector<std::uint32_t> row(d.samples.begin() + static_cast<std::ptrdiff_t>(d.offset(s, a, t, 0)),
                                                   d.samples.begin() + static_cast<std::ptrdiff_t>(d.offset(s, a, t, 0) + d.n));
                    if (d.kind == Kind::stationary) {
                        per_a = json(row);
                    } else {
                        per_a.push_back(json(row));
                    }
                }
                per_s.push_back(std::move(per_a));
            }
            outer.push_back(std::move(per_s));
        }
        j["encoding"] = kArrayEncoding;
        j["samples"] = std::move(outer);
    } else {
        std::string bytes(d.samples.size() * 4, '\0');
        for (std::size_t k = 0; k < d.samples.size(); ++k) {
            const std::uint32_t v = d.samples[k];
            for (int b = 0; b < 4; ++b) bytes[4 * k + b] = static_cast<char>((v >> (8 * b)) & 0xffU);
        }
        j["encoding"] = kBase64Encoding;
        j["samples"] = base64_encode(bytes);
    }
    return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
    try {
        const Kind kind = kind_from_string(j.at("kind").get<std::string>());
        Dataset d = Dataset::zeros(kind, j.at("S").get<int>(), j.at("A").get<int>(),
                                   kind == Kind::nonstationary ? j.at("H").get<int>() : 0, j.at("N").get<int>());
        d.source_seed = j.value("source_seed", std::uint64_t{0});
        d.source_mdp_digest = j.value("source_mdp_digest", std::string{});
        const std::string encoding = j.value("encoding", std::string(kBase64Encoding));
        const auto& payload = j.at("samples");
        if (encoding == kBase64Encoding) {
            const std::string bytes = base64_decode(payload.get<std::string>());
            if (bytes.size() != d.samples.size() * 4) throw InvalidInput("sample payload has the wrong length");
            for (std::size_t k = 0; k < d.samples.size(); ++k) {
                std::uint32_t v = 0;
                for (int b = 0; b < 4; ++b) {
                    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * k + b])) << (8 * b);
                }
                d.samples[k] = v;
            }
        } else if (encoding == kArrayEncoding) {
            for (int s = 0; s < d.num_states; ++s) {
                for (int a = 0; a < d.num_actions; ++a) {
                    for (int t = 0; t < d.layers(); ++t) {
                        const auto& row = kind == Kind::stationary ? payload.at(s).at(a) : payload.at(s).at(a).at(t);
                        if (static_cast<int>(row.size()) != d.n) throw InvalidInput("sample row has the wrong length");
                        for (int i = 0; i < d.n; ++i) d.sample(s, a, t, i) = row.at(i).get<std::uint32_t>();
                    }
                }
            }
        } else {
            throw InvalidInput("unknown sample encoding '" + encoding + "'");
        }
        const auto issues = validate_dataset(d);
        if (!issues.empty()) throw InvalidInput("invalid dataset: " + issues.front());
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed dataset JSON: ") + e.what());
    }
}

Dataset read_dataset_file(const std::string& path) { return dataset_from_json(read_json_file(path)); }

void write_dataset_file(const Dataset& d, const std::string& path, bool plain_samples) {
    write_json_file(path, dataset_to_json(d, plain_samples));
}

}  // namespace cempac
