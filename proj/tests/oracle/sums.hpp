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
// Naive discounted sum: explicit powers, summed back to front.
#include <cmath>
#include <vector>

namespace oracle {

inline double naive_discounted(const std::vector<double>& r, double gamma) {
  long double total = 0;
  for (std::size_t t = r.size(); t-- > 0;) total += std::pow(static_cast<long double>(gamma), t) * r[t];
  return static_cast<double>(total);
}

}  // namespace oracle
