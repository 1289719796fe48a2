#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace stgsim {

enum class CommCategory { ModelUp, ModelDown, NodeFeature };
enum class FlopCategory { Training, Aggregation };

const char* to_string(CommCategory c);
const char* to_string(FlopCategory c);

struct CommEntry {
  int epoch = 0;
  std::string src;
  std::string dst;
  CommCategory category = CommCategory::ModelUp;
  uint64_t bytes = 0;
};

struct FlopEntry {
  int epoch = 0;
  std::string holder;
  FlopCategory category = FlopCategory::Training;
  uint64_t flops = 0;
};

struct CommLedger {
  std::vector<CommEntry> entries;

  void record(int epoch, std::string src, std::string dst, CommCategory cat, uint64_t bytes);
  uint64_t total(CommCategory cat) const;
  uint64_t total_in_epoch(CommCategory cat, int epoch) const;
};

struct FlopLedger {
  std::vector<FlopEntry> entries;

  void record(int epoch, std::string holder, FlopCategory cat, uint64_t flops);
  uint64_t total(FlopCategory cat) const;
  uint64_t total_in_epoch(FlopCategory cat, int epoch) const;
};

// ledger.csv: epoch,src,dst,category,bytes,flops — communication rows carry
// flops=0, compute rows carry bytes=0 and dst="-".
void write_ledger_csv(const std::string& path, const CommLedger& comm, const FlopLedger& flops);

}  // namespace stgsim
