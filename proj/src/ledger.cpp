#include "stgsim/ledger.hpp"

#include <stdexcept>

#include "stgsim/csv.hpp"

namespace stgsim {

const char* to_string(CommCategory c) {
  switch (c) {
    case CommCategory::ModelUp: return "model_up";
    case CommCategory::ModelDown: return "model_down";
    case CommCategory::NodeFeature: return "node_feature";
  }
  return "?";
}

const char* to_string(FlopCategory c) {
  switch (c) {
    case FlopCategory::Training: return "training";
    case FlopCategory::Aggregation: return "aggregation";
  }
  return "?";
}

void CommLedger::record(int epoch, std::string src, std::string dst, CommCategory cat,
                        uint64_t bytes) {
  if (bytes == 0) throw std::runtime_error("communication ledger entries must carry bytes");
  entries.push_back({epoch, std::move(src), std::move(dst), cat, bytes});
}

uint64_t CommLedger::total(CommCategory cat) const {
  uint64_t sum = 0;
  for (const auto& e : entries) {
    if (e.category == cat) sum += e.bytes;
  }
  return sum;
}

uint64_t CommLedger::total_in_epoch(CommCategory cat, int epoch) const {
  uint64_t sum = 0;
  for (const auto& e : entries) {
    if (e.category == cat && e.epoch == epoch) sum += e.bytes;
  }
  return sum;
}

void FlopLedger::record(int epoch, std::string holder, FlopCategory cat, uint64_t flops) {
  entries.push_back({epoch, std::move(holder), cat, flops});
}

uint64_t FlopLedger::total(FlopCategory cat) const {
  uint64_t sum = 0;
  for (const auto& e : entries) {
    if (e.category == cat) sum += e.flops;
  }
  return sum;
}

uint64_t FlopLedger::total_in_epoch(FlopCategory cat, int epoch) const {
  uint64_t sum = 0;
  for (const auto& e : entries) {
    if (e.category == cat && e.epoch == epoch) sum += e.flops;
  }
  return sum;
}

void write_ledger_csv(const std::string& path, const CommLedger& comm, const FlopLedger& flops) {
  std::vector<std::string> lines;
  lines.push_back("epoch,src,dst,category,bytes,flops");
  for (const auto& e : comm.entries) {
    lines.push_back(std::to_string(e.epoch) + "," + e.src + "," + e.dst + "," +
                    to_string(e.category) + "," + std::to_string(e.bytes) + ",0");
  }
  for (const auto& e : flops.entries) {
    lines.push_back(std::to_string(e.epoch) + "," + e.holder + ",-," + to_string(e.category) +
                    ",0," + std::to_string(e.flops));
  }
  write_lines(path, lines);
}

}  // namespace stgsim
