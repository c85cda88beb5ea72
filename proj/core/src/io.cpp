#include "nsw/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nsw/errors.hpp"

namespace nsw {

namespace {

using nlohmann::json;

json parse(std::istream& in, const char* what) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::IoError,
                std::string(what) + " is not valid JSON: " + ex.what());
  }
  return doc;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Instance load_instance(std::istream& in) {
  json doc = parse(in, "instance");
  Instance inst;
  try {
    inst.n = doc.at("n").get<int>();
    inst.m = doc.at("m").get<int>();
    inst.k = doc.at("k").get<std::vector<int>>();
    inst.u = doc.at("u").get<std::vector<std::vector<std::vector<double>>>>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::IoError,
                std::string("instance document malformed: ") + ex.what());
  }
  require_valid(inst);
  return inst;
}

Instance load_instance_file(const std::string& path) {
  auto in = open_in(path);
  return load_instance(in);
}

void save_instance(const Instance& inst, std::ostream& out) {
  // json serializes doubles with enough digits to round-trip exactly.
  json doc;
  doc["n"] = inst.n;
  doc["m"] = inst.m;
  doc["k"] = inst.k;
  doc["u"] = inst.u;
  out << doc.dump(2) << "\n";
}

void save_instance_file(const Instance& inst, const std::string& path) {
  auto out = open_out(path);
  save_instance(inst, out);
}

Allocation load_allocation(std::istream& in, const Instance& inst) {
  json doc = parse(in, "allocation");
  Allocation al;
  try {
    al.x = doc.at("x").get<std::vector<std::vector<std::vector<double>>>>();
    al.integral = doc.value("integral", true);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::IoError,
                std::string("allocation document malformed: ") + ex.what());
  }
  auto violations = validate_allocation(inst, al);
  if (!violations.empty())
    throw Error(ErrorCode::InvalidAllocation,
                "allocation invalid: " + violations.front().what);
  return al;
}

Allocation load_allocation_file(const std::string& path,
                                const Instance& inst) {
  auto in = open_in(path);
  return load_allocation(in, inst);
}

void save_allocation(const Allocation& al, std::ostream& out) {
  json doc;
  doc["integral"] = al.integral;
  doc["x"] = al.x;
  out << doc.dump(2) << "\n";
}

void save_allocation_file(const Allocation& al, const std::string& path) {
  auto out = open_out(path);
  save_allocation(al, out);
}

}  // namespace nsw
