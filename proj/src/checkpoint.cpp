#include "cmdrnn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cmdrnn {

namespace {

constexpr const char* kMagic = "cmdrnn-checkpoint v1";

std::string hexfloat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hexfloat(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw ParseError(path + ": bad value '" + s + "'");
  }
  return v;
}

std::string next_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": unexpected end of checkpoint");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string expect_key(const std::string& line, const std::string& key, const std::string& path) {
  const std::string prefix = key + " = ";
  if (line.rfind(prefix, 0) != 0) {
    throw ParseError(path + ": expected '" + key + " = ...', got '" + line + "'");
  }
  return line.substr(prefix.size());
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  const ModelSpec& s = model.spec();
  out << kMagic << '\n';
  out << "variant = " << variant_name(s.variant) << '\n';
  out << "input_dim = " << s.input_dim << '\n';
  out << "conv_filters = " << s.conv_filters << '\n';
  out << "conv_kernel = " << s.conv_kernel << '\n';
  out << "conv_stride = " << s.conv_stride << '\n';
  out << "pool_window = " << s.pool_window << '\n';
  out << "pool_stride = " << s.pool_stride << '\n';
  out << "hidden = " << s.hidden << '\n';
  out << "memory = " << s.memory << '\n';
  out << "mixtures = " << s.mixtures << '\n';
  out << "mdn_hidden = " << s.mdn_hidden << '\n';
  const TargetStats& st = model.target_stats();
  out << "target_mean = " << hexfloat(st.mean[0]) << ' ' << hexfloat(st.mean[1]) << '\n';
  out << "target_stdev = " << hexfloat(st.stdev[0]) << ' ' << hexfloat(st.stdev[1]) << '\n';
  model.for_each_param([&out](const std::string& name, Tensor& t) {
    out << "param " << name << ' ' << t.rank();
    for (std::size_t d = 0; d < t.rank(); ++d) out << ' ' << t.extent(d);
    out << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      out << hexfloat(t[i]) << ((i + 1) % 8 == 0 || i + 1 == t.size() ? '\n' : ' ');
    }
  });
  out << "end\n";
  if (!out) throw IoError("write failed for checkpoint '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  if (next_line(in, path) != kMagic) throw ParseError(path + ": not a cmdrnn checkpoint");

  ModelSpec s;
  s.variant = variant_from_name(expect_key(next_line(in, path), "variant", path));
  auto read_uint = [&](const char* key) {
    return static_cast<std::size_t>(std::stoull(expect_key(next_line(in, path), key, path)));
  };
  s.input_dim = read_uint("input_dim");
  s.conv_filters = read_uint("conv_filters");
  s.conv_kernel = read_uint("conv_kernel");
  s.conv_stride = static_cast<int>(read_uint("conv_stride"));
  s.pool_window = static_cast<int>(read_uint("pool_window"));
  s.pool_stride = static_cast<int>(read_uint("pool_stride"));
  s.hidden = read_uint("hidden");
  s.memory = read_uint("memory");
  s.mixtures = read_uint("mixtures");
  s.mdn_hidden = read_uint("mdn_hidden");

  TargetStats st;
  {
    std::istringstream ms(expect_key(next_line(in, path), "target_mean", path));
    std::string a, b;
    ms >> a >> b;
    st.mean[0] = parse_hexfloat(a, path);
    st.mean[1] = parse_hexfloat(b, path);
    std::istringstream ss(expect_key(next_line(in, path), "target_stdev", path));
    ss >> a >> b;
    st.stdev[0] = parse_hexfloat(a, path);
    st.stdev[1] = parse_hexfloat(b, path);
  }

  Model model = checkpoint_restore(s, st);
  std::string line = next_line(in, path);
  model.for_each_param([&](const std::string& name, Tensor& t) {
    std::istringstream hs(line);
    std::string tag, got_name;
    std::size_t rank = 0;
    hs >> tag >> got_name >> rank;
    if (tag != "param" || got_name != name) {
      throw ParseError(path + ": expected parameter '" + name + "', got '" + line + "'");
    }
    Shape shape(rank);
    for (auto& e : shape) hs >> e;
    Tensor loaded(shape);
    std::size_t read = 0;
    while (read < loaded.size()) {
      std::string row = next_line(in, path);
      std::istringstream rs(row);
      std::string cell;
      while (rs >> cell) {
        if (read >= loaded.size()) throw ParseError(path + ": too many values for '" + name + "'");
        loaded[read++] = parse_hexfloat(cell, path);
      }
    }
    if (!t.same_shape(loaded)) {
      throw ParseError(path + ": parameter '" + name + "' has shape " + shape_str(loaded.shape()) +
                       ", expected " + shape_str(t.shape()));
    }
    t = std::move(loaded);
    line = next_line(in, path);
  });
  if (line != "end") throw ParseError(path + ": missing 'end' marker");
  return model;
}

}  // namespace cmdrnn
