#include "cempac/reference.hpp"

#include <array>

namespace cempac {

Dataset sample_table_dataset() {
    // [column][i], column = (s*2 + a)*3 + t
    static constexpr std::array<std::array<std::uint32_t, 3>, 12> kColumns = {{
        {1, 0, 1}, {1, 0, 0}, {1, 1, 0}, {1, 0, 1}, {1, 1, 1}, {1, 1, 1},
        {0, 1, 0}, {1, 1, 1}, {0, 1, 1}, {1, 0, 1}, {0, 0, 0}, {0, 1, 1},
    }};
    Dataset d = Dataset::zeros(Kind::nonstationary, 2, 2, 3, 3);
    for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 2; ++a) {
            for (int t = 0; t < 3; ++t) {
                for (int i = 0; i < 3; ++i) d.sample(s, a, t, i) = kColumns[(s * 2 + a) * 3 + t][i];
            }
        }
    }
    return d;
}

MdpSpec sample_table_skeleton() {
    MdpSpec m = MdpSpec::zeros(Kind::nonstationary, 2, 2, 3, 1.0, 3.0);
    for (int s = 0; s < 2; ++s) {
        for (int a = 0; a < 2; ++a) {
            for (int t = 0; t < 3; ++t) {
                m.reward(s, a, t) = s == 1 ? 1.0 : 0.0;
                auto row = m.transition_row(s, a, t);
                row[0] = 0.5;
                row[1] = 0.5;
            }
        }
    }
    return m;
}

}  // namespace cempac
