/*
Copyright 2026 The diarl Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once
// Frozen output of xoshiro_reference.py.
#include <array>
#include <cstdint>

namespace oracle {

inline constexpr std::array<std::uint64_t, 6> kState1234Next = {
    11520ULL, 0ULL, 1509978240ULL, 1215971899390074240ULL, 1216172134540287360ULL, 607988272756665600ULL};

inline constexpr std::array<std::uint64_t, 4> kSeed0State = {16294208416658607535ULL, 7960286522194355700ULL,
                                                             487617019471545679ULL, 17909611376780542444ULL};
inline constexpr std::array<std::uint64_t, 5> kSeed0Next = {11091344671253066420ULL, 13793997310169335082ULL,
                                                            1900383378846508768ULL, 7684712102626143532ULL,
                                                            13521403990117723737ULL};

inline constexpr std::array<std::uint64_t, 4> kSeed42State = {13679457532755275413ULL, 2949826092126892291ULL,
                                                              5139283748462763858ULL, 6349198060258255764ULL};
inline constexpr std::array<std::uint64_t, 5> kSeed42Next = {1546998764402558742ULL, 6990951692964543102ULL,
                                                             12544586762248559009ULL, 17057574109182124193ULL,
                                                             18295552978065317476ULL};

inline constexpr std::array<double, 4> kSeed7Uniform = {0.7005764821796896, 0.2787512294737843, 0.8396274618764198,
                                                        0.9810977250149351};
inline constexpr std::array<std::uint64_t, 10> kSeed7Below10 = {7, 2, 8, 9, 9, 8, 0, 1, 4, 1};

// epsilon = 1 arm sequences: one uniform then one bounded draw per select.
inline constexpr std::array<std::size_t, 10> kEGreedySeed42Arms3 = {1, 2, 2, 2, 1, 0, 0, 2, 2, 2};
inline constexpr std::array<std::size_t, 10> kEGreedySeed1234Arms5 = {4, 4, 4, 1, 3, 1, 3, 4, 4, 4};

}  // namespace oracle
