#include "robustlab/runlog.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace robustlab {

namespace {

const char* kHeader =
    "epoch,lr,train_robust_err,train_std_err,train_robust_loss,test_robust_err,test_std_err,"
    "val_robust_err,seconds";

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

float parse_float(const std::string& s, const std::string& path, int line_no) {
  char* end = nullptr;
  const float v = std::strtof(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed number '" + s + "'");
  return v;
}

}  // namespace

std::string runlog_csv_string(const RunLog& log) {
  std::ostringstream os;
  os << kHeader << "\n";
  for (const auto& r : log.records) {
    os << r.epoch << "," << fmt6(r.lr) << "," << fmt6(r.train_robust_err) << ","
       << fmt6(r.train_std_err) << "," << fmt6(r.train_robust_loss) << ","
       << fmt6(r.test_robust_err) << "," << fmt6(r.test_std_err) << ",";
    if (r.val_robust_err) os << fmt6(*r.val_robust_err);
    os << "," << fmt6(r.seconds) << "\n";
  }
  return os.str();
}

void write_runlog_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  const std::string text = runlog_csv_string(log);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

RunLog read_runlog_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ":1: empty file");
  if (line == std::string(kHeader) + "\r") line.pop_back();
  if (line != kHeader)
    throw std::runtime_error(path + ":1: unexpected header '" + line + "'");

  RunLog log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 9)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 9 fields, got " +
                               std::to_string(fields.size()));
    EpochRecord r;
    r.epoch = static_cast<int>(parse_float(fields[0], path, line_no));
    r.lr = parse_float(fields[1], path, line_no);
    r.train_robust_err = parse_float(fields[2], path, line_no);
    r.train_std_err = parse_float(fields[3], path, line_no);
    r.train_robust_loss = parse_float(fields[4], path, line_no);
    r.test_robust_err = parse_float(fields[5], path, line_no);
    r.test_std_err = parse_float(fields[6], path, line_no);
    if (!fields[7].empty()) r.val_robust_err = parse_float(fields[7], path, line_no);
    r.seconds = parse_float(fields[8], path, line_no);
    log.records.push_back(r);
  }
  return log;
}

}  // namespace robustlab
