#include "nsw/instance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nsw/errors.hpp"

namespace nsw {

int Instance::total_items() const {
  int total = 0;
  for (int ki : k) total += ki;
  return total;
}

double Instance::max_value_ratio() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& agent : u)
    for (const auto& type : agent)
      for (double v : type)
        if (v > 0.0) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
  if (hi == 0.0) return 1.0;  // nobody values anything
  return hi / lo;
}

double Instance::prefix_utility(int a, int i, int c) const {
  double total = 0.0;
  for (int j = 0; j < c; ++j) total += u[a][i][j];
  return total;
}

bool Instance::values_anything(int a) const {
  for (const auto& type : u[a])
    for (double v : type)
      if (v > 0.0) return true;
  return false;
}

namespace {

std::string at(int a, int i, int j) {
  std::ostringstream os;
  os << " at agent " << a << ", type " << i << ", copy " << j;
  return os.str();
}

}  // namespace

std::vector<Violation> validate(const Instance& inst) {
  std::vector<Violation> out;
  if (inst.n <= 0) out.push_back({"n must be positive"});
  if (inst.m <= 0) out.push_back({"m must be positive"});
  if ((int)inst.k.size() != inst.m) {
    out.push_back({"k must have one entry per item type"});
    return out;  // shape is broken; nothing below is trustworthy
  }
  for (int i = 0; i < inst.m; ++i)
    if (inst.k[i] <= 0) {
      std::ostringstream os;
      os << "k[" << i << "] must be positive";
      out.push_back({os.str()});
    }
  if ((int)inst.u.size() != inst.n) {
    out.push_back({"u must have one row per agent"});
    return out;
  }
  for (int a = 0; a < inst.n; ++a) {
    if ((int)inst.u[a].size() != inst.m) {
      std::ostringstream os;
      os << "u[" << a << "] must have one entry per item type";
      out.push_back({os.str()});
      continue;
    }
    for (int i = 0; i < inst.m; ++i) {
      const auto& marg = inst.u[a][i];
      if ((int)marg.size() != inst.k[i]) {
        std::ostringstream os;
        os << "u[" << a << "][" << i << "] must have k[" << i
           << "] marginal values";
        out.push_back({os.str()});
        continue;
      }
      for (int j = 0; j < inst.k[i]; ++j) {
        double v = marg[j];
        if (!std::isfinite(v) || v < 0.0)
          out.push_back({"marginal values must be finite and nonnegative" +
                         at(a, i, j)});
        if (j > 0 && marg[j] > marg[j - 1])
          out.push_back({"marginal values must be nonincreasing per type" +
                         at(a, i, j)});
      }
    }
  }
  return out;
}

void require_valid(const Instance& inst) {
  auto violations = validate(inst);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "instance invalid: " << violations.front().what;
  if (violations.size() > 1)
    os << " (and " << violations.size() - 1 << " more)";
  throw Error(ErrorCode::InvalidInstance, os.str());
}

Allocation Allocation::zeros(const Instance& inst) {
  Allocation al;
  al.integral = true;
  al.x.resize(inst.n);
  for (int a = 0; a < inst.n; ++a) {
    al.x[a].resize(inst.m);
    for (int i = 0; i < inst.m; ++i) al.x[a][i].assign(inst.k[i], 0.0);
  }
  return al;
}

std::vector<Violation> validate_allocation(const Instance& inst,
                                           const Allocation& al) {
  std::vector<Violation> out;
  if ((int)al.x.size() != inst.n) {
    out.push_back({"allocation must have one row per agent"});
    return out;
  }
  for (int a = 0; a < inst.n; ++a) {
    if ((int)al.x[a].size() != inst.m) {
      out.push_back({"allocation rows must have one entry per item type"});
      return out;
    }
    for (int i = 0; i < inst.m; ++i)
      if ((int)al.x[a][i].size() != inst.k[i]) {
        out.push_back({"allocation entries must match the copy counts"});
        return out;
      }
  }
  constexpr double kTol = 1e-9;
  for (int a = 0; a < inst.n; ++a)
    for (int i = 0; i < inst.m; ++i)
      for (int j = 0; j < inst.k[i]; ++j) {
        double v = al.x[a][i][j];
        if (!std::isfinite(v) || v < -kTol || v > 1.0 + kTol) {
          out.push_back(
              {"allocation values must lie in [0, 1]" + at(a, i, j)});
        } else if (al.integral && std::abs(v - std::round(v)) > kTol) {
          out.push_back(
              {"allocation marked integral has a fractional value" +
               at(a, i, j)});
        }
      }
  for (int i = 0; i < inst.m; ++i) {
    double supply = 0.0;
    for (int a = 0; a < inst.n; ++a)
      for (int j = 0; j < inst.k[i]; ++j) supply += al.x[a][i][j];
    if (supply > inst.k[i] + kTol * std::max(1, inst.k[i])) {
      std::ostringstream os;
      os << "type " << i << " is allocated beyond its " << inst.k[i]
         << " copies";
      out.push_back({os.str()});
    }
  }
  return out;
}

TripletIndex::TripletIndex(const Instance& inst) {
  base_.resize(inst.n);
  for (int a = 0; a < inst.n; ++a) {
    base_[a].resize(inst.m);
    for (int i = 0; i < inst.m; ++i) {
      base_[a][i] = (int)trips_.size();
      for (int j = 0; j < inst.k[i]; ++j) trips_.push_back({a, i, j});
    }
  }
}

int TripletIndex::id_of(int a, int i, int j) const {
  return base_[a][i] + j;
}

}  // namespace nsw
