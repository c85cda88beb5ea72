#pragma once

#include <iosfwd>
#include <string>

#include "nsw/instance.hpp"

namespace nsw {

// Instances and allocations are stored as UTF-8 JSON with LF line endings.
// An instance document is self-describing: {"n":..,"m":..,"k":[..],"u":[[[..]..]..]}.
// Numbers survive a save/load round trip bit-exactly.

Instance load_instance(std::istream& in);
Instance load_instance_file(const std::string& path);
void save_instance(const Instance& inst, std::ostream& out);
void save_instance_file(const Instance& inst, const std::string& path);

Allocation load_allocation(std::istream& in, const Instance& inst);
Allocation load_allocation_file(const std::string& path, const Instance& inst);
void save_allocation(const Allocation& al, std::ostream& out);
void save_allocation_file(const Allocation& al, const std::string& path);

std::string format_double(double v);  // shortest text that parses back exactly

}  // namespace nsw
