#pragma once

// Golden values frozen from tests/oracles/tiny_team_oracle.py (exact fractions).

#include <teamdp/scalar.hpp>

namespace fixtures {

inline teamdp::Rational rat(long n, long d) { return teamdp::Rational(n, d); }

/// Both agents play their current observation at both stages.
inline const teamdp::Rational kTinyCopyValue = rat(36, 25);
/// Optimal expected team utility of TinyTeam.
inline const teamdp::Rational kTinyOptimalValue = rat(1859, 1250);
/// Distinct stage-2 beliefs reachable under deterministic prescriptions.
inline constexpr int kTinyStage2BeliefsIdentity = 27;
inline constexpr int kTinyStage2BeliefsWindow1 = 9;

/// gamma_2 at c_2 = (null, (0,0)) after both play 0, last-observation scheme, order (x, y^1, y^2).
inline const teamdp::Rational kTinyBeliefWindow1[8] = {rat(9, 25), rat(9, 100), rat(1, 25), rat(1, 100),
                                                       rat(1, 100), rat(1, 25), rat(9, 100), rat(9, 25)};

/// Same belief with S = P (values 2*y1 + y2), order (x, s^1, s^2).
inline const teamdp::Rational kTinyBeliefIdentity[32] = {
    rat(261, 1250), rat(261, 5000), rat(36, 625), rat(9, 625),  rat(29, 1250), rat(29, 5000), rat(4, 625),
    rat(1, 625),    rat(9, 250),    rat(9, 1000), rat(36, 625), rat(9, 625),   rat(1, 250),   rat(1, 1000),
    rat(4, 625),    rat(1, 625),    rat(1, 625),  rat(4, 625),  rat(1, 1000),  rat(1, 250),   rat(9, 625),
    rat(36, 625),   rat(9, 1000),   rat(9, 250),  rat(1, 625),  rat(4, 625),   rat(29, 5000), rat(29, 1250),
    rat(9, 625),    rat(36, 625),   rat(261, 5000), rat(261, 1250)};

}  // namespace fixtures
