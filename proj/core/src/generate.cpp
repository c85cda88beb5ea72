#include "nsw/generate.hpp"

#include "nsw/errors.hpp"
#include "nsw/rng.hpp"

namespace nsw {

int Rng::uniform_int(int lo, int hi) {
  // Multiply-shift reduction; bias is < 2^-32 for the small ranges used here.
  std::uint64_t span = (std::uint64_t)(hi - lo) + 1;
  std::uint64_t word = bits() >> 32;
  return lo + (int)((word * span) >> 32);
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over (seed, stream); decorrelates derived streams even for
  // adjacent seeds.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Instance generate(const GenerateParams& params) {
  if (params.n <= 0 || params.m <= 0 || params.k_lo <= 0 ||
      params.k_hi < params.k_lo || params.u1_lo <= 0.0 ||
      params.u1_hi < params.u1_lo)
    throw Error(ErrorCode::UsageError, "generate: bad parameters");

  Rng rng(params.seed);
  Instance inst;
  inst.n = params.n;
  inst.m = params.m;
  inst.k.resize(params.m);
  for (int i = 0; i < params.m; ++i)
    inst.k[i] = rng.uniform_int(params.k_lo, params.k_hi);
  inst.u.resize(params.n);
  for (int a = 0; a < params.n; ++a) {
    inst.u[a].resize(params.m);
    for (int i = 0; i < params.m; ++i) {
      auto& marg = inst.u[a][i];
      marg.resize(inst.k[i]);
      marg[0] = rng.uniform(params.u1_lo, params.u1_hi);
      for (int j = 1; j < inst.k[i]; ++j)
        marg[j] = marg[j - 1] * rng.uniform();
    }
  }
  return inst;
}

}  // namespace nsw
