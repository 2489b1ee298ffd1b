#include "polyproj/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "polyproj/errors.hpp"

namespace polyproj {

namespace {

constexpr const char* kModelFormat = "polyproj.model.v1";
constexpr const char* kDatasetFormat = "polyproj.dataset.v1";

void write_doubles(std::ostream& out, const double* data, std::size_t count) {
  // Little-endian on every supported target; stored as raw IEEE-754 words.
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::istream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw UsageError("binary payload truncated");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  return in;
}

nlohmann::json read_header_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw UsageError("missing header line in '" + path + "'");
  return nlohmann::json::parse(line);
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

nlohmann::json read_json_file(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("failed to parse JSON file '" + path + "': " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_model(const std::string& path, const MlpModel& model) {
  model.validate();
  nlohmann::json header;
  header["format"] = kModelFormat;
  header["dims"] = model.dims();
  header["hidden_activation"] = activation_name(model.hidden);
  header["output_activation"] = output_activation_name(model.output);
  header["softmax_group"] = model.softmax_group;

  auto out = open_out(path);
  out << header.dump() << '\n';
  for (const auto& l : model.layers) {
    write_doubles(out, l.weights.data(), static_cast<std::size_t>(l.weights.size()));
    write_doubles(out, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
}

MlpModel load_model(const std::string& path) {
  auto in = open_in(path);
  const nlohmann::json header = read_header_line(in, path);
  if (header.value("format", "") != kModelFormat)
    throw UsageError("'" + path + "' is not a model checkpoint");
  const auto dims = header.at("dims").get<std::vector<int>>();
  MlpModel model;
  model.hidden = activation_from_name(header.at("hidden_activation").get<std::string>());
  model.output = output_activation_from_name(header.at("output_activation").get<std::string>());
  model.softmax_group = header.at("softmax_group").get<int>();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpLayer layer;
    layer.weights.resize(dims[l + 1], dims[l]);
    layer.bias.resize(dims[l + 1]);
    read_doubles(in, layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
    read_doubles(in, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

void save_dataset(const std::string& path, const SyntheticDataset& ds) {
  nlohmann::json header;
  header["format"] = kDatasetFormat;
  header["n_samples"] = ds.size();
  header["input_dim"] = static_cast<int>(ds.inputs.rows());
  header["output_dim"] = static_cast<int>(ds.targets.rows());
  header["seed"] = ds.seed;
  header["constraints"] = to_json(ds.constraints);
  header["train_idx"] = ds.train_idx;
  header["test_idx"] = ds.test_idx;

  auto out = open_out(path);
  out << header.dump() << '\n';
  write_doubles(out, ds.inputs.data(), static_cast<std::size_t>(ds.inputs.size()));
  write_doubles(out, ds.targets.data(), static_cast<std::size_t>(ds.targets.size()));
}

SyntheticDataset load_dataset(const std::string& path) {
  auto in = open_in(path);
  const nlohmann::json header = read_header_line(in, path);
  if (header.value("format", "") != kDatasetFormat)
    throw UsageError("'" + path + "' is not a dataset file");
  SyntheticDataset ds;
  const int n = header.at("n_samples").get<int>();
  const int in_dim = header.at("input_dim").get<int>();
  const int out_dim = header.at("output_dim").get<int>();
  ds.seed = header.at("seed").get<std::uint64_t>();
  ds.constraints = constraint_set_from_json(header.at("constraints"));
  ds.train_idx = header.at("train_idx").get<std::vector<int>>();
  ds.test_idx = header.at("test_idx").get<std::vector<int>>();
  ds.inputs.resize(in_dim, n);
  ds.targets.resize(out_dim, n);
  read_doubles(in, ds.inputs.data(), static_cast<std::size_t>(ds.inputs.size()));
  read_doubles(in, ds.targets.data(), static_cast<std::size_t>(ds.targets.size()));
  return ds;
}

}  // namespace polyproj
